import { ConvergenceRow } from "./csv.js";
import { formatSlope, logLogSlope } from "./slope.js";
import { Margins, PALETTE, Scale, SvgCanvas, drawAxes } from "./svg.js";

export interface Series {
  label: string;
  rows: ConvergenceRow[];
}

export interface ErrDofOptions {
  width?: number;
  height?: number;
  /** spatial polynomial degree, used for the reference-slope guides */
  p?: number;
}

export interface SeriesMeta {
  label: string;
  slope: number;
}

export interface ErrDofResult {
  svg: string;
  series: SeriesMeta[];
}

function combinedError(r: ConvergenceRow): number {
  return Math.hypot(r.err_v, r.err_sigma);
}

function guideTriangle(svg: SvgCanvas, xs: Scale, ys: Scale, slope: number,
                       xa: number, xb: number, yTop: number, color: string): void {
  // right triangle with hypotenuse of the given log-log slope, legs axis-aligned
  const yb = yTop * (xb / xa) ** slope;
  const pa: [number, number] = [xs.px(xa), ys.px(yTop)];
  const pb: [number, number] = [xs.px(xb), ys.px(yb)];
  const pc: [number, number] = [xs.px(xa), ys.px(yb)];
  svg.polygon([pa, pb, pc], color);
  svg.text(pc[0] - 4, (pa[1] + pc[1]) / 2, formatSlope(slope),
           { anchor: "end", size: 10, fill: color });
}

export function plotErrorVsDofs(series: Series[], opts: ErrDofOptions = {}): ErrDofResult {
  if (series.length === 0) throw new Error("no input series");
  const width = opts.width ?? 560;
  const height = opts.height ?? 420;
  const p = opts.p ?? 1;
  const m: Margins = { left: 62, right: 20, top: 20, bottom: 46 };

  const allX: number[] = [];
  const allY: number[] = [];
  for (const s of series) {
    if (s.rows.length < 2) throw new Error(`series '${s.label}' has fewer than two rows`);
    for (const r of s.rows) {
      allX.push(r.dofs);
      allY.push(combinedError(r));
    }
  }
  const pad = (lo: number, hi: number): [number, number] =>
    [lo / 10 ** (0.08 * Math.log10(hi / lo)), hi * 10 ** (0.08 * Math.log10(hi / lo))];
  const [xlo, xhi] = pad(Math.min(...allX), Math.max(...allX));
  const [ylo, yhi] = pad(Math.min(...allY), Math.max(...allY));

  const svg = new SvgCanvas(width, height);
  const xs = new Scale(xlo, xhi, m.left, width - m.right, true);
  const ys = new Scale(ylo, yhi, height - m.bottom, m.top, true);
  drawAxes(svg, xs, ys, m, "degrees of freedom", "error");

  const meta: SeriesMeta[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const x = s.rows.map((r) => r.dofs);
    const y = s.rows.map(combinedError);
    const fit = logLogSlope(x, y);
    meta.push({ label: s.label, slope: fit.slope });
    svg.polyline(x.map((xi, k) => [xs.px(xi), ys.px(y[k])]), color);
    x.forEach((xi, k) => svg.circle(xs.px(xi), ys.px(y[k]), 3, color));
    // legend entry with the fitted slope annotation
    const ly = m.top + 16 + 16 * i;
    const lx = width - m.right - 170;
    svg.line(lx, ly - 4, lx + 22, ly - 4, color, 2);
    svg.text(lx + 28, ly, `${s.label} (slope ${formatSlope(fit.slope)})`, { size: 11 });
  });

  // reference-slope guides for full and sparse refinement in space-time
  const gx = 10 ** (Math.log10(xlo) + 0.55 * Math.log10(xhi / xlo));
  const gx2 = gx * 10 ** (0.18 * Math.log10(xhi / xlo));
  const gy = 10 ** (Math.log10(ylo) + 0.75 * Math.log10(yhi / ylo));
  guideTriangle(svg, xs, ys, -(p + 1) / 3, gx, gx2, gy, "#555555");
  guideTriangle(svg, xs, ys, -(p + 1) / 2, gx, gx2, gy * 0.2, "#999999");

  return { svg: svg.render(), series: meta };
}
