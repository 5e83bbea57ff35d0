"""Command line entry point (``ebdevs`` / ``python3 -m ebdevs``).

Exit codes: 0 success, 1 configuration error, 2 run aborted (legitimacy or
capacity), 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import CapacityError, LegitimacyError
from .gallery import GALLERY, ConfigError, get_model
from .harness import ExperimentConfig, default_out_dir, run_experiment, write_atomic
from .simulator import LegitimacyGuard, RootCoordinator, Trace
from .transforms import (flatten, lower_to_classic, observation_projection, state_projection,
                         trace_equivalent)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_VERIFY = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ebdevs", description="EB-DEVS simulation experiments")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a replicated experiment")
    run.add_argument("--model", help="gallery model name")
    run.add_argument("--config", help="JSON configuration file")
    run.add_argument("--seed", type=int)
    run.add_argument("--reps", type=int, dest="replications")
    run.add_argument("--horizon", type=float)
    run.add_argument("--out", help="output directory (default: $EBDEVS_OUT or ./results)")
    run.add_argument("--trace", choices=("series", "events"))
    run.add_argument("--sample-dt", type=float, dest="sample_dt")
    run.add_argument("--workers", type=int)

    tr = sub.add_parser("transform", help="run a flattened or lowered gallery model")
    tr.add_argument("kind", choices=("flatten", "lower"))
    tr.add_argument("--model", required=True)
    tr.add_argument("--size", type=int, required=True)
    tr.add_argument("--config", help="JSON file with model parameter overrides")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--horizon", type=float)
    tr.add_argument("--out", help="trace CSV path (default: stdout)")

    ver = sub.add_parser("verify", help="check transformation equivalence")
    ver.add_argument("what", choices=("equivalence",))
    ver.add_argument("--model", required=True)
    ver.add_argument("--size", type=int, required=True)
    ver.add_argument("--seeds", default="0,1,2,3,4")
    ver.add_argument("--config", help="JSON file with model parameter overrides")
    ver.add_argument("--horizon", type=float)

    sub.add_parser("list-models", help="list gallery models")
    return ap


def _model_overrides(path):
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("parameter file must be a JSON object")
    return data.get("params", data)


def _trace_run(model, horizon, budget=10**6) -> Trace:
    trace = Trace()
    RootCoordinator(model, recorder=trace, guard=LegitimacyGuard(budget)).run_until(horizon)
    return trace


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(
        args.config, model=args.model, seed=args.seed, replications=args.replications,
        horizon=args.horizon, out=args.out or (None if args.config else default_out_dir()),
        trace=args.trace, sample_dt=args.sample_dt, workers=args.workers,
    )
    result = run_experiment(cfg)
    done = len(result.replications) - len(result.failed)
    print(f"{cfg.model}: {done}/{cfg.replications} replications completed -> {result.out_dir}")
    for r in result.failed:
        print(f"  replication {r.index} aborted: {r.error}", file=sys.stderr)
    return EXIT_ABORT if result.failed else EXIT_OK


def cmd_transform(args) -> int:
    entry = get_model(args.model)
    params = entry.params(_model_overrides(args.config), size=args.size)
    model = entry.build(params, args.seed, 0)
    model = flatten(model) if args.kind == "flatten" else lower_to_classic(model)
    horizon = params.horizon if args.horizon is None else args.horizon
    trace = _trace_run(model, horizon)
    header = [f"model={args.model}, transform={args.kind}, size={args.size}, seed={args.seed}"]
    text = trace.to_csv(header)
    if args.out:
        write_atomic(Path(args.out), text)
        print(f"{len(trace)} trace records -> {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    entry = get_model(args.model)
    params = entry.params(_model_overrides(args.config), size=args.size)
    horizon = params.horizon if args.horizon is None else args.horizon
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad seed list {args.seeds!r}") from None
    ok = True
    for seed in seeds:
        base = _trace_run(entry.build(params, seed, 0), horizon)
        flat = _trace_run(flatten(entry.build(params, seed, 0)), horizon)
        low = _trace_run(lower_to_classic(entry.build(params, seed, 0)), horizon)
        f = trace_equivalent(base, flat, observation_projection)
        lo = trace_equivalent(base, low, state_projection)
        ok = ok and bool(f) and bool(lo)
        print(f"seed {seed}: {len(base)} records; flatten: {f.describe()}; lower: {lo.describe()}")
    print("equivalent" if ok else "NOT equivalent")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_list(args) -> int:
    for name, entry in GALLERY.items():
        print(f"{name:10s} {entry.description}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "transform": cmd_transform, "verify": cmd_verify,
               "list-models": cmd_list}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LegitimacyError, CapacityError) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
