"""Command line entry point: ``dprem run|sweep|selftest``.

A JSON config file (keys are ExperimentConfig field names) gives the base
configuration; flags given on the command line override it.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiment as ex
from .errors import DpremError

# flag -> config field
_FLAG_FIELDS = {"dim": "dim", "n": "n", "dist": "dist", "c": "c", "alpha": "alpha", "b": "b",
                "samples": "samples", "seed": "seed", "gmax": "gmax", "mode": "mode", "out": "out",
                "workers": "workers", "l": "l", "eps": "eps", "eta_class": "eta_class"}


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser, ladder: bool) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--mode", choices=ex.MODES)
    p.add_argument("--dim", type=int)
    if ladder:
        p.add_argument("--n", type=_ints, help="comma separated N ladder, e.g. 10,13,16")
    else:
        p.add_argument("--n", type=int)
    p.add_argument("--dist", help="gaussian, uniform or cexp")
    p.add_argument("--c", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--b", type=_floats, help="comma separated windows, e.g. 0.5,1,2")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--gmax", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--l", type=int, help="tuple order for zet and cf-bounds")
    p.add_argument("--eps", type=float, help="covariance threshold for decorrelation")
    p.add_argument("--eta-class", dest="eta_class", type=float)
    p.add_argument("--i-know", dest="i_know", action="store_true",
                   help="lift the enumeration budgets")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dprem", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run one experiment"), ladder=False)
    _add_common(sub.add_parser("sweep", help="run an N ladder and report trends"), ladder=True)
    st = sub.add_parser("selftest", help="calibrate the statistical tests on synthetic nulls")
    st.add_argument("--trials", type=int, default=200)
    st.add_argument("--seed", type=int, default=12345)
    st.add_argument("--out")
    return ap


def config_from_args(args: argparse.Namespace) -> ex.ExperimentConfig:
    base: dict = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            base[name] = v
    if args.i_know:
        base["i_know"] = True
    if args.command == "sweep" and "n" in base and isinstance(base["n"], list):
        base["n_ladder"] = base.pop("n")
    return ex.ExperimentConfig.from_dict(base)


def _summary(report: ex.ExperimentReport) -> str:
    lines = [f"regime: {report.regime}"]
    for v in report.verdicts:
        where = f" N={v.details['n']}" if "n" in v.details else ""
        lines.append(f"{'PASS' if v.passed else 'FAIL'}  {v.name}{where}: {v.statistic:.6g} (threshold {v.threshold:.6g})")
    lines.append(f"wall clock: {report.wall_clock:.2f}s")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "selftest":
            report = ex.run_selftest(meta_trials=args.trials, seed=args.seed, out=args.out)
        else:
            cfg = config_from_args(args)
            report = ex.run(cfg) if args.command == "run" else ex.sweep(cfg)
    except (DpremError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ex.EXIT_CONFIG
    print(_summary(report))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
