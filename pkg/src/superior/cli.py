"""Command line entry point: ``superior run | gen | check``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .convex_sets import ConstraintFamily, ContractViolation, Hyperplane
from .harness import (ARMS, INSTANCE_KINDS, ExperimentConfig, ProblemParseError, ProblemValidationError,
                      generate_instance, load_problem, run_experiment, write_problem)
from .string_projection import DSAPOperator, FixedPlanSequence, make_kaczmarz_plan
from .superiorize import (PerturbationSchedule, WeakConfig, basic_run, check_bounded_perturbation_resilience,
                          check_fejer_decrement, weak_superiorized_run)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_OUTPUT = 3


def _arms(text: str) -> tuple:
    arms = tuple(a.strip() for a in text.split(",") if a.strip())
    bad = [a for a in arms if a not in ARMS]
    if bad or not arms:
        raise argparse.ArgumentTypeError(f"arms must be a comma list drawn from {','.join(ARMS)}")
    return arms


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superior", description="Superiorized projection methods for convex feasibility.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run basic/weak/strong arms on a problem file")
    r.add_argument("--problem", required=True)
    r.add_argument("--arms", type=_arms, default=ARMS)
    r.add_argument("--plan", default="kaczmarz", help="kaczmarz, cimmino, random or a strings JSON file")
    r.add_argument("--plan-seed", type=int, default=None, help="seed of the random plan sequence")
    r.add_argument("--q-bar", type=int, default=None)
    r.add_argument("--delta", type=float, default=None)
    r.add_argument("--eta0", type=float, default=1.0)
    r.add_argument("--decay", type=float, default=0.9)
    r.add_argument("--n-inner", type=int, default=5)
    r.add_argument("--epsilon", type=float, default=1e-6)
    r.add_argument("--max-outer", type=int, default=10000)
    r.add_argument("--max-inner-tries", type=int, default=50)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int, default=0, help="default for --plan-seed")
    r.add_argument("--no-timing", action="store_true", help="write wall_ms as 0 for byte-reproducible summaries")
    r.add_argument("--require-output", action="store_true", help="exit 3 if some arm finds no epsilon-output")

    g = sub.add_parser("gen", help="write a generated problem file")
    g.add_argument("--kind", choices=INSTANCE_KINDS, default="consistent-linear")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    c = sub.add_parser("check", help="run an empirical check suite")
    c.add_argument("--suite", choices=("fejer", "resilience"), required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--instances", type=int, default=10)
    return p


def _cmd_run(args) -> int:
    spec = load_problem(args.problem)
    cfg = ExperimentConfig(
        arms=args.arms, plan=args.plan, plan_seed=args.seed if args.plan_seed is None else args.plan_seed,
        q_bar=args.q_bar, delta=args.delta, eta0=args.eta0, decay=args.decay, n_inner=args.n_inner,
        epsilon=args.epsilon, max_outer=args.max_outer, max_inner_tries=args.max_inner_tries,
        out=args.out, timing=not args.no_timing,
    )
    result = run_experiment(spec, cfg)
    for row in result.summary:
        K = "none" if row["K_epsilon"] is None else row["K_epsilon"]
        phi = "-" if row["phi_at_output"] is None else f"{row['phi_at_output']:.6g}"
        print(f"{row['arm']:>6}: K_epsilon={K} phi={phi} iterations={row['iterations']}")
    print(f"wrote {len(result.files)} files to {args.out}")
    if args.require_output and any(r["K_epsilon"] is None for r in result.summary):
        return EXIT_NO_OUTPUT
    return EXIT_OK


def _cmd_gen(args) -> int:
    spec = generate_instance(args.kind, args.dim, args.m, args.seed)
    write_problem(spec, args.out)
    print(f"wrote {args.kind} instance J={spec.dimension} m={spec.m} to {args.out}")
    return EXIT_OK


def _check_fejer(seed: int, instances: int) -> bool:
    ok = True
    for s in range(seed, seed + instances):
        spec = generate_instance("consistent-linear", 20, 10, s)
        plans = FixedPlanSequence(make_kaczmarz_plan(spec.m))
        basic = basic_run(spec.family, plans, spec.objective, spec.x0, 200)
        rep_b = check_fejer_decrement(basic, spec.feasible_point, spec.family)
        cfg = WeakConfig(5, PerturbationSchedule(1.0, 0.9), 200)
        weak = weak_superiorized_run(spec.family, plans, spec.objective, cfg, spec.x0)
        rep_w = check_fejer_decrement(weak, spec.feasible_point, spec.family)
        print(f"seed {s}: basic {rep_b.summary()}")
        print(f"seed {s}: weak  {rep_w.summary()}")
        ok &= rep_b.monotone
    return ok


def _check_resilience(seed: int, instances: int) -> bool:
    failed = 0
    for s in range(seed, seed + instances):
        spec = generate_instance("consistent-linear", 10, 20, s)
        op = DSAPOperator(spec.family, make_kaczmarz_plan(spec.m))
        rep = check_bounded_perturbation_resilience(op, spec.family, 1, s)
        failed += not rep.all_reached
        print(f"seed {s}: summable  {rep.summary()}")
    J = 5
    far = ConstraintFamily([Hyperplane(np.ones(J), 100.0)])
    ctrl = check_bounded_perturbation_resilience(DSAPOperator(far, make_kaczmarz_plan(1)), far, instances, seed,
                                                 beta="harmonic")
    print(f"control (non-summable 1/(k+1)): {ctrl.summary()}")
    return failed == 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "gen":
            return _cmd_gen(args)
        ok = _check_fejer(args.seed, args.instances) if args.suite == "fejer" else \
            _check_resilience(args.seed, args.instances)
        return EXIT_OK if ok else 1
    except (ProblemParseError, ProblemValidationError, ContractViolation) as exc:
        print(f"superior: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"superior: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
