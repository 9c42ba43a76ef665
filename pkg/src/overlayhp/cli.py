"""Command-line benchmark driver.

Usage:
    bench <study> [--strategy fitted|unfitted] [--alpha F] [--pmax N]
                  [--dt F] [--over-integration N] [--out DIR] ...

Studies: bar, corner, overlap, heat.  All outputs are CSV files in the
directory given by --out; exit code 0 on success, nonzero with a single
machine-readable "error: ..." line on failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .studies import StudyConfig, run_bar, run_corner, run_heat, run_overlap


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__.splitlines()[0])
    parser.add_argument("study", choices=["bar", "corner", "overlap", "heat"])
    parser.add_argument("--strategy", choices=["fitted", "unfitted"], default="unfitted")
    parser.add_argument("--alpha", type=float, default=None, help="overlay size factor")
    parser.add_argument("--pmax", type=int, default=None, help="final cycle degree")
    parser.add_argument("--dt", type=float, default=None, help="integration time step (heat)")
    parser.add_argument(
        "--over-integration",
        type=int,
        default=None,
        dest="over_integration",
        help="load quadrature multiplier (default 1; heat unrefined model 5)",
    )
    parser.add_argument("--out", type=Path, default=Path("bench_out"))
    parser.add_argument(
        "--reference-resolution",
        type=int,
        default=501,
        dest="reference_resolution",
        help="heat reference mesh resolution (251 is the CI fallback)",
    )
    parser.add_argument(
        "--field-resolution",
        type=int,
        default=200,
        dest="field_resolution",
        help="sampling intervals per axis for heat field snapshots",
    )
    parser.add_argument(
        "--models",
        nargs="+",
        default=["reference", "unrefined", "dynamic"],
        choices=["reference", "unrefined", "dynamic"],
        help="heat models to run",
    )
    parser.add_argument("--eta-count", type=int, default=13, dest="eta_count")
    return parser


_DEFAULT_PMAX = {"bar": 15, "corner": 19}
_DEFAULT_ALPHA = {"bar": 2.0 / 3.0, "corner": 0.5}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = StudyConfig(
            study=args.study,
            strategy=args.strategy,
            alpha=args.alpha if args.alpha is not None else _DEFAULT_ALPHA.get(args.study, 0.5),
            p_max=args.pmax if args.pmax is not None else _DEFAULT_PMAX.get(args.study, 15),
            dt=args.dt,
            over_integration=args.over_integration,
            out=args.out,
            reference_resolution=args.reference_resolution,
            field_resolution=args.field_resolution,
            models=tuple(args.models),
        )
        config.out.mkdir(parents=True, exist_ok=True)
        if args.study == "bar":
            result = run_bar(config)
            _report_ladder(result)
        elif args.study == "corner":
            result = run_corner(config)
            _report_ladder(result)
        elif args.study == "overlap":
            result = run_overlap(config, n_eta=args.eta_count)
            print(f"overlap study: {len(result.etas)} overlap values, degrees 1..8")
            if result.non_spd:
                print(f"non-SPD cells: {result.non_spd}")
            if result.unconverged:
                print(f"PCG hit the iteration cap in {len(result.unconverged)} cells")
        else:
            results = run_heat(config)
            for model, res in results.items():
                print(
                    f"{model}: N={res.n_unknowns}, max T={res.max_temperature:.5f}, "
                    f"max |grad T|={res.max_gradient:.5f}, snapshot at t={res.snapshot_time:g}"
                )
        print(f"outputs written to {config.out}")
        return 0
    except Exception as exc:  # pragma: no cover - exercised via CLI tests
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _report_ladder(result):
    for rec in result.records:
        print(f"cycle {rec.cycle}: p={rec.p} N={rec.n_unknowns} E={rec.error_percent:.6e} %")
    if result.truncated_cycles:
        print(f"ladder truncated (overlay width underflow) in cycles {result.truncated_cycles}")


if __name__ == "__main__":
    sys.exit(main())
