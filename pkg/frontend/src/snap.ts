import { SnapshotRow } from "./csv.js";
import { Margins, Scale, SvgCanvas } from "./svg.js";

export interface SnapOptions {
  width?: number;
  height?: number;
}

export interface SnapResult {
  svg: string;
  cells: number;
  vMin: number;
  vMax: number;
}

/** Blue-white-red diverging map, symmetric about zero. */
export function colorFor(v: number, vAbs: number): string {
  const t = vAbs > 0 ? Math.max(-1, Math.min(1, v / vAbs)) : 0;
  const lerp = (a: number, b: number, s: number) => Math.round(a + (b - a) * s);
  let r: number, g: number, b: number;
  if (t < 0) {
    r = lerp(255, 33, -t); g = lerp(255, 102, -t); b = lerp(255, 172, -t);
  } else {
    r = lerp(255, 178, t); g = lerp(255, 24, t); b = lerp(255, 43, t);
  }
  return `#${((1 << 24) | (r << 16) | (g << 8) | b).toString(16).slice(1)}`;
}

/** Smallest positive gap between sorted distinct sample coordinates. */
function gridSpacing(values: number[]): number {
  const uniq = [...new Set(values)].sort((a, b) => a - b);
  if (uniq.length < 2) return 1;
  let d = Infinity;
  for (let i = 1; i < uniq.length; i++) d = Math.min(d, uniq[i] - uniq[i - 1]);
  return d;
}

/** Renders v over the sample points as one filled square per sample.
 * Missing samples (points outside the domain) simply leave background
 * showing, so non-rectangular domains keep their shape. */
export function plotSnapshot(rows: SnapshotRow[], opts: SnapOptions = {}): SnapResult {
  if (rows.length === 0) throw new Error("snapshot has no samples");
  const width = opts.width ?? 520;
  const height = opts.height ?? 520;
  const m: Margins = { left: 40, right: 16, top: 16, bottom: 32 };

  const x1 = rows.map((r) => r.x1);
  const x2 = rows.map((r) => r.x2);
  const v = rows.map((r) => r.v);
  const dx = gridSpacing(x1);
  const dy = gridSpacing(x2);
  const xlo = Math.min(...x1) - dx / 2;
  const xhi = Math.max(...x1) + dx / 2;
  const ylo = Math.min(...x2) - dy / 2;
  const yhi = Math.max(...x2) + dy / 2;
  const vAbs = Math.max(...v.map(Math.abs));

  const svg = new SvgCanvas(width, height);
  const xs = new Scale(xlo, xhi, m.left, width - m.right, false);
  const ys = new Scale(ylo, yhi, height - m.bottom, m.top, false);
  const cw = xs.px(xlo + dx) - xs.px(xlo);
  const ch = ys.px(ylo) - ys.px(ylo + dy);

  for (const r of rows) {
    svg.rect(xs.px(r.x1 - dx / 2), ys.px(r.x2 + dy / 2), cw + 0.25, ch + 0.25,
             colorFor(r.v, vAbs));
  }
  svg.text(m.left, height - 10, `x1 in [${xlo + dx / 2}, ${xhi - dx / 2}]`, { size: 10 });
  svg.text(m.left, 12, `v range [${(-vAbs).toPrecision(3)}, ${vAbs.toPrecision(3)}]`,
           { size: 10 });

  return { svg: svg.render(), cells: rows.length, vMin: Math.min(...v), vMax: Math.max(...v) };
}
