import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import { parseConvergenceCsv, parseSnapshotCsv } from "../src/csv.js";

const fixture = (name: string) =>
  readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf8");

describe("convergence CSV", () => {
  it("parses the solver's table with empty first-row rates", () => {
    const rows = parseConvergenceCsv(fixture("test1_full.csv"));
    expect(rows.length).toBe(4);
    expect(rows[0].rate_v).toBeNull();
    expect(rows[1].rate_v).toBeGreaterThan(1);
    expect(rows[3].dofs).toBeGreaterThan(rows[0].dofs);
  });

  it("parses sparse tables where err_dg is blank", () => {
    const rows = parseConvergenceCsv(fixture("test1_sparse.csv"));
    expect(rows.every((r) => r.err_dg === null)).toBe(true);
  });

  it("rejects a mismatched schema", () => {
    expect(() => parseConvergenceCsv("a,b\n1,2\n")).toThrow(/schema mismatch/);
    expect(() => parseConvergenceCsv(fixture("gamma_t0.5.csv"))).toThrow(/schema mismatch/);
  });

  it("rejects non-numeric entries", () => {
    const bad = "level,h_x,h_t,dofs,err_v,rate_v,err_sigma,rate_sigma,err_dg,rate_dg\n"
      + "1,0.5,0.5,96,oops,,0.1,,0.2,\n";
    expect(() => parseConvergenceCsv(bad)).toThrow(/non-numeric/);
  });
});

describe("snapshot CSV", () => {
  it("parses sample rows", () => {
    const rows = parseSnapshotCsv(fixture("gamma_t0.5.csv"));
    expect(rows.length).toBeGreaterThan(100);
    expect(Number.isFinite(rows[0].v)).toBe(true);
  });

  it("rejects the convergence schema", () => {
    expect(() => parseSnapshotCsv(fixture("test1_full.csv"))).toThrow(/schema mismatch/);
  });
});
