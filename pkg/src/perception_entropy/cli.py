"""Command-line front end.

Exit codes: 0 success, 1 invalid input (config, CSV, fit), 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from .config import ConfigError, dump_run_config, load_run_config, ClassEntry
from .entropy_core import ApSample, DegenerateFitError, fit_ap_curve
from .evaluator import evaluate, export_heatmap
from .optimizer import optimize

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2


class InputError(ValueError):
    pass


def read_ap_samples(path) -> List[ApSample]:
    """Parse a ``m_norm,ap`` CSV; errors name the offending line."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["m_norm", "ap"]:
        raise InputError(f"{path}: line 1: expected header 'm_norm,ap'")
    if len(rows) < 2 or not any(r for r in rows[1:]):
        raise InputError(f"{path}: line 2: parse error, no samples after the header")
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise InputError(f"{path}: line {lineno}: parse error, expected two columns")
        try:
            samples.append(ApSample(float(row[0]), float(row[1])))
        except ValueError as exc:
            raise InputError(f"{path}: line {lineno}: parse error, {exc}") from None
    return samples


def _write_text(path, text: str) -> None:
    Path(path).write_text(text)


def cmd_evaluate(config_path, out_path, heatmap_path=None, workers: int = 1) -> int:
    rc = load_run_config(config_path)
    field = rc.build_prior()
    report = evaluate(rc.configuration, field, rc.space,
                      retain_per_voxel=heatmap_path is not None, workers=workers)
    _write_text(out_path, json.dumps(report.to_dict(), indent=2) + "\n")
    if heatmap_path is not None:
        export_heatmap(report, field, heatmap_path)
    print(f"total_entropy={report.total_entropy:.6f}")
    return EXIT_OK


def cmd_export_heatmap(config_path, out_path, workers: int = 1) -> int:
    rc = load_run_config(config_path)
    field = rc.build_prior()
    report = evaluate(rc.configuration, field, rc.space, retain_per_voxel=True, workers=workers)
    export_heatmap(report, field, out_path)
    print(f"total_entropy={report.total_entropy:.6f}")
    return EXIT_OK


def cmd_optimize(config_path, seed: int, out_path, trace_path=None, workers: int = 1,
                 overrides: Optional[dict] = None, quiet: bool = False) -> int:
    rc = load_run_config(config_path)
    if overrides:
        try:
            rc = replace(rc, schedule=replace(rc.schedule, **overrides))
        except ValueError as exc:
            raise ConfigError(f"optimizer override: {exc}") from None
    field = rc.build_prior()

    def progress(rec):
        if not quiet:
            print(f"round {rec.index}: n_trans={rec.n_trans:.4g} m "
                  f"n_rot={math.degrees(rec.n_rot):.4g} deg best={rec.best_entropy:.6f}",
                  file=sys.stderr)

    best, trace = optimize(rc.configuration, rc.search, rc.schedule, field, rc.space,
                           seed=seed, workers=workers, callback=progress)
    # histogram paths stay valid wherever the output lands
    classes = tuple(
        c if c.histogram is None or Path(c.histogram).is_absolute()
        else ClassEntry(c.name, str((rc.base_dir / c.histogram).resolve()), c.z_extent)
        for c in rc.classes
    )
    out_rc = replace(rc.with_configuration(best), classes=classes)
    trace_path = Path(trace_path) if trace_path else Path(str(out_path) + ".trace.jsonl")
    _write_text(out_path, dump_run_config(out_rc))
    _write_text(trace_path, trace.to_jsonl())
    print(f"initial_entropy={trace.initial_entropy:.6f}")
    print(f"final_entropy={trace.rounds[-1].best_entropy:.6f}")
    return EXIT_OK


def cmd_fit_curve(samples_csv, out_path) -> int:
    curve = fit_ap_curve(read_ap_samples(samples_csv))
    _write_text(out_path, json.dumps(curve.to_dict(), indent=2) + "\n")
    print(f"a={curve.a:.6f} b={curve.b:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perception-entropy",
                                description="Evaluate and optimize LiDAR/camera configurations.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evaluate", help="perception entropy of a configuration")
    e.add_argument("config")
    e.add_argument("--out", required=True, help="report JSON path")
    e.add_argument("--heatmap", help="optional x,y,entropy CSV path")
    e.add_argument("--workers", type=int, default=1)

    o = sub.add_parser("optimize", help="search sensor placements")
    o.add_argument("config")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", required=True, help="best configuration JSON path")
    o.add_argument("--trace", help="trace JSON-lines path (default: OUT.trace.jsonl)")
    o.add_argument("--samples-per-round", type=int)
    o.add_argument("--decay", type=float)
    o.add_argument("--n-init-trans", type=float, help="meters")
    o.add_argument("--n-init-rot", type=float, help="degrees")
    o.add_argument("--n-final-trans", type=float, help="meters")
    o.add_argument("--n-final-rot", type=float, help="degrees")
    o.add_argument("--workers", type=int, default=1)
    o.add_argument("--quiet", action="store_true")

    f = sub.add_parser("fit-curve", help="fit AP = a ln(m) + b from samples")
    f.add_argument("samples")
    f.add_argument("--out", required=True)

    h = sub.add_parser("export-heatmap", help="per-column entropy CSV")
    h.add_argument("config")
    h.add_argument("--out", required=True)
    h.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "evaluate":
            return cmd_evaluate(args.config, args.out, args.heatmap, args.workers)
        if args.command == "export-heatmap":
            return cmd_export_heatmap(args.config, args.out, args.workers)
        if args.command == "fit-curve":
            return cmd_fit_curve(args.samples, args.out)
        overrides = {}
        for attr, key, conv in (
            ("samples_per_round", "samples_per_round", int),
            ("decay", "decay", float),
            ("n_init_trans", "n_init_trans", float),
            ("n_final_trans", "n_final_trans", float),
            ("n_init_rot", "n_init_rot", math.radians),
            ("n_final_rot", "n_final_rot", math.radians),
        ):
            v = getattr(args, attr)
            if v is not None:
                overrides[key] = conv(v)
        return cmd_optimize(args.config, args.seed, args.out, args.trace, args.workers,
                            overrides, args.quiet)
    except DegenerateFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
