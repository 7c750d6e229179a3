/** Minimal SVG document builder. Elements are accumulated as strings and
 * serialized with a fixed header; no DOM or external renderer involved. */

export interface Margins {
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(x: number): string {
  return Number(x.toFixed(3)).toString();
}

export class SvgCanvas {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  rect(x: number, y: number, w: number, h: number, fill: string, stroke = "none"): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
      `fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1,
       dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
      `stroke="${stroke}" stroke-width="${width}"${d}/>`,
    );
  }

  polyline(points: [number, number][], stroke: string, width = 1.5): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  polygon(points: [number, number][], stroke: string, fill = "none"): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polygon points="${pts}" fill="${fill}" stroke="${stroke}"/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill: string): void {
    this.parts.push(
      `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, content: string, opts: {
    size?: number; anchor?: "start" | "middle" | "end"; fill?: string; rotate?: number;
  } = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#000";
    const transform = opts.rotate
      ? ` transform="rotate(${opts.rotate} ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" ` +
      `font-family="sans-serif" text-anchor="${anchor}" fill="${fill}"${transform}>` +
      `${esc(content)}</text>`,
    );
  }

  render(): string {
    return `<?xml version="1.0" encoding="UTF-8"?>\n` +
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="${this.width}" height="${this.height}" fill="#ffffff"/>\n` +
      this.parts.join("\n") + "\n</svg>\n";
  }
}

/** Maps data coordinates to pixel coordinates, optionally through log10. */
export class Scale {
  private readonly a: number;
  private readonly b: number;

  constructor(private lo: number, private hi: number,
              pixLo: number, pixHi: number, readonly log: boolean) {
    const tl = log ? Math.log10(lo) : lo;
    const th = log ? Math.log10(hi) : hi;
    this.a = (pixHi - pixLo) / (th - tl);
    this.b = pixLo - this.a * tl;
  }

  px(x: number): number {
    const t = this.log ? Math.log10(x) : x;
    return this.a * t + this.b;
  }

  /** Decade tick positions for log scales, ~5 round ticks for linear. */
  ticks(): number[] {
    if (this.log) {
      const out: number[] = [];
      for (let e = Math.ceil(Math.log10(this.lo)); e <= Math.floor(Math.log10(this.hi)); e++) {
        out.push(10 ** e);
      }
      return out.length >= 2 ? out : [this.lo, this.hi];
    }
    const step = (this.hi - this.lo) / 4;
    return [0, 1, 2, 3, 4].map((i) => this.lo + i * step);
  }
}

export function tickLabel(x: number, log: boolean): string {
  if (log) {
    const e = Math.log10(x);
    if (Number.isInteger(e)) return `1e${e}`;
  }
  return Number(x.toPrecision(3)).toString();
}

export function drawAxes(svg: SvgCanvas, xs: Scale, ys: Scale, m: Margins,
                         xLabel: string, yLabel: string): void {
  const x0 = m.left;
  const x1 = svg.width - m.right;
  const y0 = svg.height - m.bottom;
  const y1 = m.top;
  svg.line(x0, y0, x1, y0, "#000");
  svg.line(x0, y0, x0, y1, "#000");
  for (const t of xs.ticks()) {
    const px = xs.px(t);
    svg.line(px, y0, px, y0 + 5, "#000");
    svg.text(px, y0 + 18, tickLabel(t, xs.log), { anchor: "middle", size: 10 });
  }
  for (const t of ys.ticks()) {
    const py = ys.px(t);
    svg.line(x0 - 5, py, x0, py, "#000");
    svg.text(x0 - 8, py + 3, tickLabel(t, ys.log), { anchor: "end", size: 10 });
  }
  svg.text((x0 + x1) / 2, svg.height - 8, xLabel, { anchor: "middle" });
  svg.text(14, (y0 + y1) / 2, yLabel, { anchor: "middle", rotate: -90 });
}
