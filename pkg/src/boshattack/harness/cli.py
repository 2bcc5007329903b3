"""Command line entry point: ``boshattack <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..attackers import AttackerConfig, InitializationError
from ..bosh import SCHEDULES, BoshConfig, PreconditionError
from ..geometry import SearchParams
from ..tpe import TpeConfig
from ..victim import LandscapeGenerationError, ModelFormatError, gen_landscape, load_model, save_model
from .metrics import compute_metrics, read_per_example_csv
from .outputs import emit_outputs
from .runs import ExperimentSpec, boundary_slice, load_examples, run_experiment


def _attack_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("model", help="model JSON file")
    p.add_argument("--examples", help="JSON array of inputs (default: the landscape's reference point)")
    p.add_argument("--schedule", choices=sorted(SCHEDULES), help="preset budgets and intervals")
    p.add_argument("--attacker", choices=["sign_opt", "opt", "boundary"], default="sign_opt")
    p.add_argument("--num-probes", type=int, default=20)
    p.add_argument("--probe-radius", type=float, default=0.01)
    p.add_argument("--step-size", type=float, default=0.2)
    p.add_argument("--k", type=int, default=30)
    p.add_argument("--m0", type=int, default=None)
    p.add_argument("--cut-frac", type=float, default=0.5)
    p.add_argument("--interval-ratio", type=float, default=None)
    p.add_argument("--resample-rule", choices=["matched", "fixed", "off"], default="matched")
    p.add_argument("--resample-cap", type=int, default=None)
    p.add_argument("--resample-pre-cut", action="store_true", help="count resamples from the pre-cut pool size")
    p.add_argument("--per-dir-budget", type=int, default=None)
    p.add_argument("--total-budget", type=int, default=None)
    p.add_argument("--tpe-alpha", type=float, default=0.2)
    p.add_argument("--tpe-samples", type=int, default=100)
    p.add_argument("--tpe-prefer", choices=["max", "min"], default="max", help="select candidates by max or min l/g")
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--rel-tol", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--out", default="runs/out")


def _spec_from_args(args, mode: str) -> ExperimentSpec:
    model = load_model(args.model)
    sched = dict(SCHEDULES[args.schedule]) if args.schedule else {}
    for key, val in (
        ("m0", args.m0),
        ("interval_ratio", args.interval_ratio),
        ("per_dir_budget", args.per_dir_budget),
        ("resample_cap", args.resample_cap),
    ):
        if val is not None:
            sched[key] = val
    bcfg = BoshConfig(
        k=args.k,
        cut_frac=args.cut_frac,
        resample_rule=args.resample_rule,
        count_before_cut=args.resample_pre_cut,
        total_budget=args.total_budget,
        seed=args.seed,
        **sched,
    )
    return ExperimentSpec(
        model=model,
        examples=load_examples(model, args.examples),
        mode=mode,
        bosh=bcfg,
        attacker=AttackerConfig(args.attacker, args.num_probes, args.probe_radius, args.step_size),
        tpe=TpeConfig(alpha=args.tpe_alpha, inner_samples=args.tpe_samples, prefer=args.tpe_prefer),
        search=SearchParams(lambda0=args.lambda0, rel_tol=args.rel_tol),
        n_inits=getattr(args, "n_inits", 1),
        epsilon=args.epsilon,
        seed=args.seed,
    )


def _run(args, mode: str) -> int:
    spec = _spec_from_args(args, mode)
    summary, outcomes = run_experiment(spec)
    emit_outputs(args.out, summary, [o.trace for o in outcomes], extra={"mode": mode})
    print(json.dumps({k: v for k, v in summary.to_dict().items() if k != "per_example"}, sort_keys=True))
    return 0


def cmd_landscape_gen(args) -> int:
    x0 = np.zeros(args.d)
    land, gt = gen_landscape(
        args.seed, args.d, args.num_basins, (args.dist_min, args.dist_max), (args.radius_min, args.radius_max), x0
    )
    save_model(land, args.output)
    print(json.dumps({"ground_truth": gt, "path": str(args.output)}))
    return 0


def cmd_slice(args) -> int:
    model = load_model(args.model)
    x0 = load_examples(model, args.examples)[0][0]
    d = model.dim
    rng = np.random.default_rng(args.seed)
    u1 = np.asarray(json.loads(args.u1), dtype=float) if args.u1 else rng.standard_normal(d)
    u2 = np.asarray(json.loads(args.u2), dtype=float) if args.u2 else rng.standard_normal(d)
    grid = boundary_slice(model, x0, u1, u2, args.grid_n, args.extent)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(out, grid, fmt="%d", delimiter=",")
    print(json.dumps({"path": str(out), "labels": sorted(int(v) for v in np.unique(grid))}))
    return 0


def cmd_metrics(args) -> int:
    lams, qs, origins = read_per_example_csv(args.per_example)
    summary = compute_metrics(lams, qs, args.epsilon, args.baseline_queries, origins)
    doc = summary.to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(json.dumps({k: v for k, v in doc.items() if k != "per_example"}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boshattack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="single run of the base attacker")
    _attack_args(p)
    p.set_defaults(func=lambda a: _run(a, "single"))

    p = sub.add_parser("multi-init", help="best of several independent runs")
    _attack_args(p)
    p.add_argument("--n-inits", type=int, default=30)
    p.set_defaults(func=lambda a: _run(a, "multi-init"))

    p = sub.add_parser("bosh", help="successive halving with TPE resampling")
    _attack_args(p)
    p.set_defaults(func=lambda a: _run(a, "bosh"))

    p = sub.add_parser("landscape", help="synthetic landscapes")
    lsub = p.add_subparsers(dest="landscape_command", required=True)
    g = lsub.add_parser("gen", help="generate a landscape file")
    g.add_argument("output")
    g.add_argument("--d", type=int, default=20)
    g.add_argument("--num-basins", type=int, default=8)
    g.add_argument("--dist-min", type=float, default=2.0)
    g.add_argument("--dist-max", type=float, default=5.0)
    g.add_argument("--radius-min", type=float, default=1.8)
    g.add_argument("--radius-max", type=float, default=5.0)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_landscape_gen)

    p = sub.add_parser("slice", help="label grid on a 2-d plane through x0")
    p.add_argument("model")
    p.add_argument("--examples")
    p.add_argument("--u1", help="JSON vector; random if omitted")
    p.add_argument("--u2", help="JSON vector; random if omitted")
    p.add_argument("--grid-n", type=int, default=101)
    p.add_argument("--extent", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/slice.csv")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("metrics", help="recompute metrics from a per-example CSV")
    p.add_argument("per_example")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--baseline-queries", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ModelFormatError, PreconditionError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InitializationError, LandscapeGenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
