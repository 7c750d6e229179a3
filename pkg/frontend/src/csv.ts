import Papa from "papaparse";

export interface ConvergenceRow {
  level: number;
  h_x: number;
  h_t: number;
  dofs: number;
  err_v: number;
  rate_v: number | null;
  err_sigma: number;
  rate_sigma: number | null;
  err_dg: number | null;
  rate_dg: number | null;
}

export interface SnapshotRow {
  x1: number;
  x2: number;
  v: number;
  sigma1: number;
  sigma2: number;
}

export const CONVERGENCE_HEADER = [
  "level", "h_x", "h_t", "dofs",
  "err_v", "rate_v", "err_sigma", "rate_sigma", "err_dg", "rate_dg",
];

export const SNAPSHOT_HEADER = ["x1", "x2", "v", "sigma1", "sigma2"];

function parseTable(text: string, expected: string[]): Record<string, string>[] {
  const res = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (res.errors.length > 0) {
    throw new Error(`CSV parse error: ${res.errors[0].message}`);
  }
  const fields = res.meta.fields ?? [];
  if (fields.join(",") !== expected.join(",")) {
    throw new Error(
      `schema mismatch: expected columns ${expected.join(",")}, got ${fields.join(",")}`,
    );
  }
  return res.data;
}

function num(value: string, column: string): number {
  const x = Number(value);
  if (!Number.isFinite(x)) throw new Error(`non-numeric value '${value}' in column ${column}`);
  return x;
}

function optional(value: string, column: string): number | null {
  return value === "" ? null : num(value, column);
}

export function parseConvergenceCsv(text: string): ConvergenceRow[] {
  return parseTable(text, CONVERGENCE_HEADER).map((r) => ({
    level: num(r.level, "level"),
    h_x: num(r.h_x, "h_x"),
    h_t: num(r.h_t, "h_t"),
    dofs: num(r.dofs, "dofs"),
    err_v: num(r.err_v, "err_v"),
    rate_v: optional(r.rate_v, "rate_v"),
    err_sigma: num(r.err_sigma, "err_sigma"),
    rate_sigma: optional(r.rate_sigma, "rate_sigma"),
    err_dg: optional(r.err_dg, "err_dg"),
    rate_dg: optional(r.rate_dg, "rate_dg"),
  }));
}

export function parseSnapshotCsv(text: string): SnapshotRow[] {
  return parseTable(text, SNAPSHOT_HEADER).map((r) => ({
    x1: num(r.x1, "x1"),
    x2: num(r.x2, "x2"),
    v: num(r.v, "v"),
    sigma1: num(r.sigma1, "sigma1"),
    sigma2: num(r.sigma2, "sigma2"),
  }));
}
