#!/usr/bin/env node
import { readFileSync, writeFileSync } from "node:fs";
import { basename } from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { parseConvergenceCsv, parseSnapshotCsv } from "./csv.js";
import { plotErrorVsDofs } from "./errdof.js";
import { plotSnapshot } from "./snap.js";

/** Output is always SVG; a .png request gets its extension swapped with a note. */
export function resolveOutput(path: string): { path: string; note?: string } {
  if (path.toLowerCase().endsWith(".png")) {
    const svgPath = path.slice(0, -4) + ".svg";
    return { path: svgPath, note: `writing SVG instead of PNG: ${svgPath}` };
  }
  return { path };
}

export function main(argv: string[]): number {
  let status = 0;
  const parser = yargs(argv)
    .scriptName("plot")
    .command(
      "errdof <csv...>",
      "log-log error vs degrees of freedom from convergence CSVs",
      (y) => y
        .positional("csv", { type: "string", array: true, demandOption: true })
        .option("o", { alias: "output", type: "string", demandOption: true })
        .option("p", { type: "number", default: 1,
                       describe: "spatial degree for the reference-slope guides" }),
      (args) => {
        const series = (args.csv as string[]).map((f) => ({
          label: basename(f).replace(/\.csv$/i, ""),
          rows: parseConvergenceCsv(readFileSync(f, "utf8")),
        }));
        const res = plotErrorVsDofs(series, { p: args.p as number });
        const out = resolveOutput(args.o as string);
        if (out.note) console.error(out.note);
        writeFileSync(out.path, res.svg);
        for (const s of res.series) {
          console.log(`${s.label}: fitted slope ${s.slope.toFixed(2)}`);
        }
      },
    )
    .command(
      "snap <samples>",
      "heatmap of v from a snapshot sample CSV",
      (y) => y
        .positional("samples", { type: "string", demandOption: true })
        .option("o", { alias: "output", type: "string", demandOption: true }),
      (args) => {
        const rows = parseSnapshotCsv(readFileSync(args.samples as string, "utf8"));
        const res = plotSnapshot(rows);
        const out = resolveOutput(args.o as string);
        if (out.note) console.error(out.note);
        writeFileSync(out.path, res.svg);
        console.log(`${res.cells} samples, v in [${res.vMin}, ${res.vMax}]`);
      },
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      console.error(`error: ${err ? err.message : msg}`);
      status = 1;
    });
  try {
    parser.parseSync();
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    status = 1;
  }
  return status;
}

const invokedDirectly = process.argv[1] !== undefined
  && import.meta.url.endsWith(basename(process.argv[1]));
if (invokedDirectly) {
  process.exit(main(hideBin(process.argv)));
}
