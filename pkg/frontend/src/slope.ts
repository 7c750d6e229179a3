export interface SlopeFit {
  slope: number;
  intercept: number;
}

/** Least-squares fit of log(y) against log(x). */
export function logLogSlope(x: number[], y: number[]): SlopeFit {
  if (x.length !== y.length || x.length < 2) {
    throw new Error("slope fit needs at least two matched (x, y) pairs");
  }
  const lx = x.map(Math.log);
  const ly = y.map(Math.log);
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx === 0) throw new Error("slope fit is degenerate: all x values equal");
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx };
}

export function formatSlope(s: number): string {
  return s.toFixed(2);
}
