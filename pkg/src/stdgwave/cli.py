"""Command-line driver: convergence runs, snapshots, and signal probes.

Outputs land next to the configured path, or under the directory named by
the STDGWAVE_OUTDIR environment variable when set.  Exit code 0 on success,
2 when a numerical invariant gate fails, 1 on configuration or solver
errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .problems import (
    GateError,
    load_config,
    probe_rows_to_csv,
    rows_to_csv,
    rows_to_markdown,
    run_convergence,
    run_signal_probe,
    run_sparse,
    snapshot,
    snapshot_rows_to_csv,
)


def _out_path(name: str) -> str:
    outdir = os.environ.get("STDGWAVE_OUTDIR")
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        return os.path.join(outdir, os.path.basename(name))
    return name


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="stdgwave")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="convergence study")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--mode", choices=("full", "sparse"), default="full")

    p_snap = sub.add_parser("snapshot", help="sample the solution on a grid")
    p_snap.add_argument("--config", required=True)
    p_snap.add_argument("--t", type=float, required=True)
    p_snap.add_argument("--grid", type=int, default=100)

    p_probe = sub.add_parser("probe", help="signal time series at the probe point")
    p_probe.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            rows = run_sparse(cfg) if args.mode == "sparse" else run_convergence(cfg)
            path = _out_path(cfg.output)
            _write(path, rows_to_csv(rows))
            md = os.path.splitext(path)[0] + ".md"
            _write(md, rows_to_markdown(rows))
            print(rows_to_markdown(rows), end="")
            print(f"wrote {path} and {md}")
        elif args.command == "snapshot":
            rows = snapshot(cfg, args.t, args.grid)
            path = _out_path(os.path.splitext(cfg.output)[0] + f"_t{args.t:g}.csv")
            _write(path, snapshot_rows_to_csv(rows))
            print(f"wrote {path} ({len(rows)} samples)")
        else:
            rows = run_signal_probe(cfg)
            path = _out_path(os.path.splitext(cfg.output)[0] + "_probe.csv")
            _write(path, probe_rows_to_csv(rows))
            print(f"wrote {path} ({len(rows)} samples)")
    except GateError as exc:
        print(f"invariant gate failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
