import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import { ConvergenceRow, parseConvergenceCsv } from "../src/csv.js";
import { plotErrorVsDofs } from "../src/errdof.js";
import { logLogSlope } from "../src/slope.js";

const fixture = (name: string) =>
  readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");

function syntheticRows(exponent: number): ConvergenceRow[] {
  return [1, 2, 3, 4].map((l) => {
    const dofs = 100 * 4 ** l;
    const e = dofs ** exponent;
    return {
      level: l, h_x: 2 ** -l, h_t: 2 ** -l, dofs,
      err_v: e / Math.sqrt(2), rate_v: null,
      err_sigma: e / Math.sqrt(2), rate_sigma: null,
      err_dg: null, rate_dg: null,
    };
  });
}

describe("plotErrorVsDofs", () => {
  it("annotates a synthetic e = dofs^-1 series with slope -1.00", () => {
    const res = plotErrorVsDofs([{ label: "synthetic", rows: syntheticRows(-1) }]);
    expect(res.series[0].slope).toBeCloseTo(-1.0, 2);
    expect(res.svg).toContain("-1.00");
  });

  it("puts one legend entry per series", () => {
    const res = plotErrorVsDofs([
      { label: "alpha", rows: syntheticRows(-1) },
      { label: "beta", rows: syntheticRows(-0.5) },
    ]);
    expect(res.series.map((s) => s.label)).toEqual(["alpha", "beta"]);
    expect(res.svg).toContain("alpha (slope");
    expect(res.svg).toContain("beta (slope");
  });

  it("renders the full vs sparse study with slopes matching an independent fit", () => {
    const series = ["test1_full.csv", "test1_sparse.csv"].map((f) => ({
      label: f.replace(".csv", ""),
      rows: parseConvergenceCsv(fixture(f)),
    }));
    const res = plotErrorVsDofs(series, { p: 1 });
    expect(res.svg.startsWith("<?xml")).toBe(true);
    expect(res.svg).toContain("<svg");
    for (const s of series) {
      const independent = logLogSlope(
        s.rows.map((r) => r.dofs),
        s.rows.map((r) => Math.hypot(r.err_v, r.err_sigma)),
      ).slope;
      const annotated = res.series.find((m) => m.label === s.label)!.slope;
      expect(Math.abs(annotated - independent)).toBeLessThan(0.05);
    }
    // both reference-slope guides are drawn for p = 1
    expect(res.svg).toContain("-0.67");
    expect(res.svg).toContain("-1.00");
  });

  it("rejects empty input and single-row series", () => {
    expect(() => plotErrorVsDofs([])).toThrow(/no input/);
    expect(() => plotErrorVsDofs([
      { label: "short", rows: syntheticRows(-1).slice(0, 1) },
    ])).toThrow(/fewer than two/);
  });
});

describe("logLogSlope", () => {
  it("recovers an exact power law", () => {
    const x = [10, 100, 1000];
    const y = x.map((v) => 3 * v ** -1.5);
    expect(logLogSlope(x, y).slope).toBeCloseTo(-1.5, 10);
  });

  it("rejects degenerate inputs", () => {
    expect(() => logLogSlope([1], [1])).toThrow();
    expect(() => logLogSlope([2, 2], [1, 3])).toThrow(/degenerate/);
  });
});
