"""Command-line entry point.

Exit codes: 0 success, 1 verification/check failure, 2 usage error.
Relative output paths are resolved against ``$EDGECACHE_OUTPUT_DIR`` when it
is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend
from .caching import SystemConfig, check_theorem1, check_topset_threshold
from .harness import (
    ExperimentConfig,
    VerificationError,
    load_config,
    mean_transmissions,
    run_experiment,
    sweep,
    write_metadata,
    write_results,
)
from .indexcoding import (
    XorPlan,
    check_coloring_soundness,
    check_theorem3,
    instance_from_json,
    load_json,
    verify_plan,
)
from .mds import check_theorem2
from .popularity import Ranking, RankingError, TraceError, kendall_tau, load_trace

OUTPUT_ENV = "EDGECACHE_OUTPUT_DIR"

# flag name -> config key
_CONFIG_FLAGS = {
    "m": int,
    "n": int,
    "s": int,
    "c": int,
    "p": float,
    "q": float,
    "split": str,
    "slots": int,
    "trials": int,
    "seed": int,
    "schemes": str,
    "drift_mode": str,
    "trace": str,
    "payload_bytes": int,
}


class UsageError(Exception):
    pass


def _out_path(path: str | None, default_name: str | None = None) -> Path | None:
    outdir = os.environ.get(OUTPUT_ENV)
    if path is None:
        if outdir and default_name:
            return Path(outdir) / default_name
        return None
    p = Path(path)
    if outdir and not p.is_absolute():
        p = Path(outdir) / p
    return p


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="JSON file with any ExperimentConfig keys")
    for name, typ in _CONFIG_FLAGS.items():
        flag = "--" + name.replace("_", "-")
        g.add_argument(flag, type=typ, default=None, dest=name)
    g.add_argument("--parallel", type=int, default=1, help="worker processes (default 1)")


def _resolve_config(args) -> ExperimentConfig:
    data = load_config(args.config).to_dict() if args.config else ExperimentConfig().to_dict()
    for name in _CONFIG_FLAGS:
        v = getattr(args, name)
        if v is None:
            continue
        key = "trace_path" if name == "trace" else name
        data[key] = v
    if args.trace and data.get("drift_mode") == "value":
        data["drift_mode"] = "trace"
    try:
        return ExperimentConfig.from_dict(data)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _echo_config(cfg: ExperimentConfig) -> None:
    print("config: " + json.dumps(cfg.to_dict(), sort_keys=True))
    print(f"seed: {cfg.seed}")


def _cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    _echo_config(cfg)
    rows = run_experiment(cfg, parallel=args.parallel)
    means = mean_transmissions(rows)
    base = means.get("uncoded")
    for scheme, mean in means.items():
        extra = f"  saving {1 - mean / base:6.1%}" if base else ""
        print(f"{scheme:24s} {mean:8.3f}{extra}")
    out = _out_path(args.out, f"simulate.{args.format}")
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_results(rows, out, args.format)
        write_metadata(cfg, out.with_name(out.name + ".meta.json"))
        print(f"wrote {len(rows)} rows to {out}")
    return 0


def _parse_values(text: str, param: str):
    typ = float if param in ("p", "q") else int
    try:
        return [typ(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --values {text!r} for {param}") from None


def _cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    _echo_config(cfg)
    values = _parse_values(args.values, args.param)
    if not values:
        raise UsageError("--values must list at least one grid value")
    try:
        points = sweep(args.param, values, cfg, parallel=args.parallel)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = ["param", "value", "scheme", "mean_transmissions", "saving", "t_un_mean", "kendall_mean", "kendall_std"]
    table = []
    for pt in points:
        for scheme, mean in pt.means.items():
            table.append(
                [pt.param, pt.value, scheme, mean, pt.savings(scheme) if "uncoded" in pt.means else None,
                 pt.t_un, pt.kendall_mean, pt.kendall_std]
            )
            print(f"{pt.param}={pt.value!s:6s} {scheme:24s} {mean:8.3f}")
    out = _out_path(args.out, f"sweep.{args.format}")
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        if args.format == "json":
            out.write_text(json.dumps([dict(zip(header, r)) for r in table], indent=1) + "\n")
        else:
            with out.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in table])
        write_metadata(cfg, out.with_name(out.name + ".meta.json"), {"sweep": {"param": args.param, "values": values}})
        print(f"wrote sweep table to {out}")
    return 0


def _cmd_check(args) -> int:
    which = {"1", "2", "3", "coloring"} if args.which == "all" else {args.which}
    rng = np.random.default_rng(args.seed)
    print(f"seed: {args.seed}")
    ok = True
    if "1" in which:
        config = SystemConfig(args.m, args.n, args.s)
        rep = check_theorem1(config, args.c, args.trials, rng)
        print(("PASS " if rep.ok else "FAIL ") + rep.summary())
        for v in (rep.violations + rep.kendall_violations)[:5]:
            print(f"  witness: {v}")
        ok &= rep.ok
        for m in range(4, 7):
            for s in range(1, m):
                t = check_topset_threshold(m, s)
                print(
                    ("PASS " if t.ok else "FAIL ")
                    + f"top-set threshold m={m} s={s}: bound={t.bound} printed={t.printed_bound:g} "
                    f"violations={len(t.violations)} witness_at_bound={t.witness_at_bound} "
                    f"printed_counterexample={t.printed_counterexample}"
                )
                ok &= t.ok
    if "2" in which:
        rep = check_theorem2(args.trials, rng)
        print(("PASS " if rep.ok else "FAIL ") + rep.summary())
        for f in rep.failures[:5]:
            print(f"  witness: {f}")
        ok &= rep.ok
    if "coloring" in which:
        rep = check_coloring_soundness(args.trials, rng)
        print(("PASS " if rep.ok else "FAIL ") + rep.summary())
        for f in rep.failures[:5]:
            print(f"  witness: {f}")
        ok &= rep.ok
    if "3" in which:
        try:
            rep = check_theorem3(args.n3, args.c3, args.s3, args.beta1, args.beta2, args.trials3, rng)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        passed = rep.fraction >= args.min_fraction
        print(("PASS " if passed else "FAIL ") + rep.summary() + f" (required >= {args.min_fraction})")
        print(f"  histogram: {rep.histogram()}")
        ok &= passed
        out = _out_path(args.out, "theorem3.json")
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(json.dumps(rep.to_json(), indent=1) + "\n")
            print(f"wrote histogram to {out}")
    return 0 if ok else 1


def _parse_ranks(text: str) -> Ranking:
    try:
        return Ranking([int(x) for x in text.replace(";", ",").split(",") if x.strip()])
    except (ValueError, RankingError) as exc:
        raise UsageError(f"bad ranking {text!r}: {exc}") from None


def _cmd_kendall(args) -> int:
    if args.trace:
        try:
            trace = load_trace(args.trace)
        except (OSError, TraceError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print("slot,wcs,kendall")
        for t in range(1, len(trace)):
            for i, (a, b) in enumerate(zip(trace[t - 1], trace[t])):
                print(f"{t},{i},{kendall_tau(a, b)}")
        return 0
    if args.a is None or args.b is None:
        raise UsageError("kendall needs --trace FILE or both --a and --b")
    a, b = _parse_ranks(args.a), _parse_ranks(args.b)
    try:
        print(kendall_tau(a, b))
    except RankingError as exc:
        raise UsageError(str(exc)) from None
    return 0


def _cmd_verify_plan(args) -> int:
    try:
        plan = XorPlan.from_json(load_json(args.plan))
        inst = instance_from_json(load_json(args.instance))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = verify_plan(plan, inst, dynamic=not args.static)
    for i, f, t in report.trace:
        print(f"transmission {t}: WCS {i} decodes file {f}")
    if report.ok:
        print(f"OK: {len(plan)} transmissions satisfy all requests")
        return 0
    print(f"FAIL: undecodable (wcs, file) pairs: {report.undecodable}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgecache", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run seeded episodes and write per-slot rows")
    _add_config_flags(p)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="mean transmissions per scheme over a parameter grid")
    _add_config_flags(p)
    p.add_argument("--param", choices=("m", "n", "s", "c", "p", "q"), required=True)
    p.add_argument("--values", required=True, help="comma-separated grid values")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("check-theorems", help="run the transmission-bound checks")
    p.add_argument("--which", choices=("1", "2", "3", "coloring", "all"), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--s", type=int, default=20)
    p.add_argument("--c", type=int, default=25)
    p.add_argument("--n3", type=int, default=50)
    p.add_argument("--c3", type=int, default=25)
    p.add_argument("--s3", type=int, default=40)
    p.add_argument("--beta1", type=float, default=1.0)
    p.add_argument("--beta2", type=float, default=6.25)
    p.add_argument("--trials3", type=int, default=200)
    p.add_argument("--min-fraction", type=float, default=0.90)
    p.add_argument("--out", help="where to write the index-coding bound histogram (JSON)")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("kendall", help="Kendall tau distance between rankings or over a trace")
    p.add_argument("--trace")
    p.add_argument("--a", help="ranks of files 0..m-1, comma-separated (e.g. 1,2,3,4)")
    p.add_argument("--b")
    p.set_defaults(func=_cmd_kendall)

    p = sub.add_parser("verify-plan", help="replay decoding of an XOR plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--static", action="store_true", help="decode from cached files only")
    p.set_defaults(func=_cmd_verify_plan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    logging.getLogger(__name__).info("kernel backend: %s", backend())
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"edgecache: error: {exc}", file=sys.stderr)
        return 2
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
