"""Command-line interface: ``rdpg-cpd <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import RdpgCpdError
from .io import FORMATS, ingest_timeseries, read_result, read_series, write_result, write_series
from .metrics import (
    abs_k_error,
    benchmark,
    format_csv,
    format_table,
    hausdorff_one_sided,
    records_to_json,
)
from .segmentation import AUTO, detect
from .series import ChangePointSet

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_help()}\n{self.prog}: error: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _tau(text):
    if text.upper() == AUTO:
        return AUTO
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"tau must be positive or AUTO, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rdpg-cpd", description="Change point detection for dynamic RDPG networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate a labelled series")
    s.add_argument("--scenario", required=True, choices=["1", "2", "3", "4", "model1"])
    s.add_argument("--n", type=_positive_int, default=100)
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--eps", type=float, default=0.3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", help="JSON config for --scenario model1")
    s.add_argument("--format", choices=FORMATS)
    s.add_argument("--out", required=True)

    s = sub.add_parser("detect", help="detect change points in a series file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--d", type=_positive_int, default=10)
    s.add_argument("--M", type=_positive_int, default=120)
    s.add_argument("--tau", type=_tau, default=AUTO)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=FORMATS)
    s.add_argument("--out")

    s = sub.add_parser("evaluate", help="compare estimated and true change points")
    s.add_argument("--est", required=True, help="result/truth JSON file or comma list, e.g. 48,105")
    s.add_argument("--truth", required=True, help="result/truth JSON file or comma list")

    s = sub.add_parser("benchmark", help="Monte-Carlo benchmark from a plan file")
    s.add_argument("--plan", required=True)
    s.add_argument("--trials", type=_positive_int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=_positive_int, default=1)
    s.add_argument("--out")
    s.add_argument("--csv")

    s = sub.add_parser("ingest", help="correlation networks from a node-by-frame matrix")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--bins", type=_positive_int, required=True)
    s.add_argument("--threshold", type=float, default=0.7)
    s.add_argument("--subsample", type=_positive_int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=FORMATS)
    s.add_argument("--out", required=True)

    s = sub.add_parser("check-theory", help="run the exact-law and population-CUSUM checks")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=_positive_int, default=100)
    return p


def truth_path(out) -> Path:
    return Path(str(out) + ".truth.json")


def _model1(args):
    from .laws import law_from_spec
    from .simulate import Model1Config, SegmentSpec, gen_model1

    if not args.config:
        raise UsageError("--scenario model1 requires --config")
    cfg = json.loads(Path(args.config).read_text())
    try:
        segments = tuple(SegmentSpec(int(sg["start"]), law_from_spec(sg["law"])) for sg in cfg["segments"])
        config = Model1Config(int(cfg["T"]), args.n, int(cfg["d"]), segments, args.rho, args.seed)
    except (KeyError, TypeError) as exc:
        raise RdpgCpdError(f"bad model1 config: {exc}") from None
    return gen_model1(config), cfg


def cmd_simulate(args):
    from .simulate import generate

    if args.scenario == "model1":
        labeled, cfg = _model1(args)
        params = {"scenario": "model1", "config": cfg}
    else:
        labeled = generate(int(args.scenario), args.n, args.seed, rho=args.rho, eps=args.eps)
        params = {"scenario": int(args.scenario), "rho": args.rho, "eps": args.eps}
    write_series(labeled.series, args.out, args.format)
    meta = {
        "truth": list(labeled.truth.points),
        "n": labeled.series.n,
        "T": labeled.series.T,
        "seed": args.seed,
        **params,
        "info": {k: v for k, v in labeled.info.items() if isinstance(v, (int, float, str))},
        "tool_version": __version__,
    }
    truth_path(args.out).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote T={labeled.series.T} n={labeled.series.n} to {args.out}; truth {meta['truth']}")
    return EXIT_OK


def _format_result(res) -> str:
    rows = [("points", ", ".join(map(str, res.points.points)) or "(none)"),
            ("tau", f"{res.tau:.6g} ({res.tau_policy})"), ("d", res.d), ("M", res.M),
            ("seed", res.seed), ("n", res.n), ("T", res.T)]
    rows += [(f"time {k}", f"{v:.3f}s") for k, v in res.stage_timings.items()]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def cmd_detect(args):
    series = read_series(args.inp, args.format)
    res = detect(series, d=args.d, M=args.M, seed=args.seed, tau=args.tau)
    res.source = str(args.inp)
    if args.out:
        write_result(res, args.out)
        print(_format_result(res))
    else:
        print(json.dumps(res.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _load_points(text) -> ChangePointSet:
    path = Path(text)
    if path.exists():
        obj = json.loads(path.read_text())
        if "truth" in obj:
            return ChangePointSet(tuple(obj["truth"]))
        if "points" in obj:
            return read_result(path).points
        raise RdpgCpdError(f"{text}: no 'points' or 'truth' field")
    text = text.strip()
    if text in ("", "-", "none"):
        return ChangePointSet(())
    try:
        return ChangePointSet(tuple(int(v) for v in text.split(",")))
    except ValueError:
        raise UsageError(f"cannot read change points from {text!r}") from None


def cmd_evaluate(args):
    est, truth = _load_points(args.est), _load_points(args.truth)
    rows = [("|K^-K|", abs_k_error(est, truth)),
            ("d(C^|C)", hausdorff_one_sided(est, truth)),
            ("d(C|C^)", hausdorff_one_sided(truth, est))]
    for k, v in rows:
        print(f"{k:8s} {v:g}")
    return EXIT_OK


def cmd_benchmark(args):
    plan = json.loads(Path(args.plan).read_text())
    records = benchmark(plan, args.seed, trials=args.trials, n_jobs=args.jobs)
    print(format_table(records))
    if args.out:
        Path(args.out).write_text(records_to_json(records) + "\n")
    if args.csv:
        Path(args.csv).write_text(format_csv(records))
    return EXIT_OK


def cmd_ingest(args):
    series = ingest_timeseries(args.inp, args.bins, args.threshold, args.subsample, args.seed)
    write_series(series, args.out, args.format)
    print(f"wrote T={series.T} n={series.n} to {args.out}")
    return EXIT_OK


def cmd_check_theory(args):
    from .theory import run_theory_checks

    rows = run_theory_checks(seed=args.seed, trials=args.trials)
    width = max(len(name) for name, _, _ in rows)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name.ljust(width)}  {detail}")
    return EXIT_OK if all(ok for _, ok, _ in rows) else EXIT_DATA


COMMANDS = {
    "simulate": cmd_simulate,
    "detect": cmd_detect,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
    "ingest": cmd_ingest,
    "check-theory": cmd_check_theory,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        text = str(exc)
        if "usage:" not in text:
            text = f"{build_parser().format_usage()}rdpg-cpd: error: {text}"
        print(text, file=sys.stderr)
        return EXIT_USAGE
    except (RdpgCpdError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
