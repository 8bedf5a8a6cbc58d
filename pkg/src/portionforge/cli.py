"""Command-line front end: profile I/O, mechanism dispatch, audits, proof checks.

Exit codes: 0 success/pass, 1 audit failed with witness, 2 malformed input or
flags, 3 mechanism/model incompatibility.  All randomized searches take a seed
(default 0) and reports are byte-identical across runs with identical inputs,
flags, and seed; timings are only included on request because they would break
that reproducibility.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import axioms, impossibility, phantoms, welfare
from .core import (
    Distribution,
    Profile,
    UtilityModel,
    mean_rule,
    utilities,
)
from .numerics import grid_argmax
from .onedim import uniform_phantom
from .sampling import random_profiles

MODELS = ("l1", "l2", "linf", "leontief", "leximin-leontief")
MECHANISMS = (
    "nash",
    "uniform-phantom",
    "independent-markets",
    "utilitarian-l1",
    "mean",
    "capped-nearest",
)
AXIOMS = (
    "efficiency",
    "range-respect",
    "proportionality",
    "cfs",
    "strategyproofness",
    "group-strategyproofness",
    "continuity",
)

EXIT_FAIL = 1
EXIT_BAD_INPUT = 2
EXIT_INCOMPATIBLE = 3


class InputError(Exception):
    pass


class IncompatibleError(Exception):
    pass


def thread_cap() -> int:
    """Worker cap from PORTIONFORGE_THREADS; evaluation is single-threaded."""
    raw = os.environ.get("PORTIONFORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ------------------------------------------------------------------
# Profile files
# ------------------------------------------------------------------

def load_profile(path: str) -> tuple[Profile, str]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read profile file {path}: {exc}")
    try:
        m = int(data["m"])
        model = str(data.get("model", "leontief")).lower()
        agents = data["agents"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed profile file {path}: {exc}")
    if model not in MODELS:
        raise InputError(f"unknown model tag {model!r}")
    if not agents or any(len(row) != m for row in agents):
        raise InputError("agent rows must all have length m")
    try:
        profile = Profile(agents)
    except ValueError as exc:
        raise InputError(str(exc))
    return profile, model


def save_profile(path: str, profile: Profile, model: str) -> None:
    payload = {
        "m": profile.m,
        "model": model,
        "agents": [[float(x) for x in row] for row in profile.peaks],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _emit(payload: dict, out: str | None, fmt: str = "json") -> None:
    if fmt == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:  # csv: lossy flat export of the distribution only
        dist = payload.get("distribution", [])
        text = ",".join(f"{x!r}" for x in dist) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------
# Mechanism dispatch
# ------------------------------------------------------------------

def resolve_mechanism(name: str, cap: float = 0.9):
    if name == "nash":
        return welfare.nash_optimize
    if name == "independent-markets":
        return phantoms.independent_markets
    if name == "utilitarian-l1":
        return welfare.utilitarian_l1
    if name == "mean":
        return mean_rule
    if name == "uniform-phantom":
        def rule(profile: Profile) -> Distribution:
            if profile.m != 2:
                raise IncompatibleError("uniform-phantom requires exactly 2 alternatives")
            x = float(uniform_phantom([float(p) for p in profile.peaks[:, 1]]))
            return Distribution([1.0 - x, x])
        return rule
    if name == "capped-nearest":
        def rule(profile: Profile) -> Distribution:
            if profile.n != 1:
                raise IncompatibleError("capped-nearest is a single-agent mechanism")
            return phantoms.capped_nearest(profile.peaks[0], cap=cap)
        return rule
    raise InputError(f"unknown mechanism {name!r}")


def cmd_aggregate(args) -> int:
    profile, model = load_profile(args.profile)
    mechanism = resolve_mechanism(args.mechanism, cap=args.cap)
    result = mechanism(profile)
    if model == "leximin-leontief":
        utils = utilities(UtilityModel.LEONTIEF, profile, result)
    else:
        utils = utilities(model, profile, result)
    payload = {
        "command": "aggregate",
        "mechanism": args.mechanism,
        "model": model,
        "distribution": [float(x) for x in result.values],
        "utilities": [float(u) for u in utils],
    }
    _emit(payload, args.out, args.format)
    return 0


# ------------------------------------------------------------------
# Audits
# ------------------------------------------------------------------

def _audit_one(
    axiom: str, mechanism, model: str, profile: Profile, seed: int,
    resolution: int | None,
):
    if axiom == "efficiency":
        return axioms.check_efficiency(model, profile, mechanism(profile))
    if axiom == "range-respect":
        return axioms.check_range_respect(profile, mechanism(profile))
    if axiom == "cfs":
        if model not in ("leontief", "leximin-leontief"):
            raise IncompatibleError("the exact cfs test is defined for leontief models")
        return axioms.check_cfs_leontief(profile, mechanism(profile), seed=seed)
    if axiom == "strategyproofness":
        default = 50 if profile.m <= 3 else 8
        cfg = axioms.SearchConfig(seed=seed, grid_resolution=resolution or default)
        return axioms.audit_strategyproofness(mechanism, model, profile, cfg)
    if axiom == "group-strategyproofness":
        cfg = axioms.SearchConfig(seed=seed, include_grid=False)
        return axioms.audit_group_sp(mechanism, model, profile, config=cfg)
    if axiom == "continuity":
        return axioms.audit_continuity(mechanism, profile, seed=seed)
    raise InputError(f"axiom {axiom!r} needs --random (proportionality) or is unknown")


def cmd_audit(args) -> int:
    mechanism = resolve_mechanism(args.mechanism, cap=args.cap)
    started = time.perf_counter()
    reports = []
    if args.axiom == "proportionality":
        if not args.random:
            raise InputError("proportionality audits need --random N M TRIALS")
        n, m, _ = args.random
        reports.append(axioms.check_proportionality(mechanism, n, m, seed=args.seed))
        profiles_used = f"single-minded({n},{m})"
    elif args.profile:
        profile, model = load_profile(args.profile)
        model = args.model or model
        reports.append(
            _audit_one(args.axiom, mechanism, model, profile, args.seed, args.resolution)
        )
        profiles_used = args.profile
    elif args.random:
        n, m, trials = args.random
        model = args.model or "leontief"
        for profile in random_profiles(args.seed, trials, n, m, n_min=n, m_min=m):
            reports.append(
                _audit_one(args.axiom, mechanism, model, profile, args.seed, args.resolution)
            )
        profiles_used = f"random({n},{m},{trials})"
    else:
        raise InputError("provide --profile FILE or --random N M TRIALS")

    failed = [r for r in reports if r.verdict == "fail"]
    payload = {
        "command": "audit",
        "axiom": args.axiom,
        "mechanism": args.mechanism,
        "seed": args.seed,
        "profiles": profiles_used,
        "thread_cap": thread_cap(),
        "verdicts": [r.verdict for r in reports],
        "witnesses": [r.to_dict()["witness"] for r in failed],
    }
    if args.timings:
        payload["timings"] = {"seconds": time.perf_counter() - started}
    _emit(payload, args.out)
    return EXIT_FAIL if failed else 0


# ------------------------------------------------------------------
# Impossibility verification and the grid oracle
# ------------------------------------------------------------------

def cmd_verify_impossibility(args) -> int:
    if args.agents < 3:
        raise InputError("the impossibility chains need at least 3 agents")
    report = impossibility.verify_chain(args.model, args.agents)
    lines = report.to_lines()
    gauntlet = None
    if args.mechanism:
        mechanism = resolve_mechanism(args.mechanism, cap=args.cap)
        gauntlet = impossibility.mechanism_gauntlet(
            mechanism, args.model, args.agents
        ).to_dict()
    payload = {
        "command": "verify-impossibility",
        "model": args.model,
        "agents": args.agents,
        "certified": report.certified,
        "failed_step": report.failed_step,
        "steps": lines,
    }
    if gauntlet is not None:
        payload["gauntlet"] = gauntlet
    _emit(payload, args.out)
    return 0 if report.certified else EXIT_FAIL


def cmd_oracle(args) -> int:
    profile, _ = load_profile(args.profile)
    if args.objective == "nash":
        objective = lambda Q: welfare.nash_objective_batch(profile, Q)  # noqa: E731
    else:
        objective = lambda Q: welfare.utilitarian_objective_batch(profile, Q)  # noqa: E731
    point = grid_argmax(objective, profile.m, args.resolution)
    payload = {
        "command": "oracle",
        "objective": args.objective,
        "resolution": args.resolution,
        "argmax": [float(x) for x in point],
        "objective_value": float(objective(point[None, :])[0]),
    }
    _emit(payload, args.out)
    return 0


# ------------------------------------------------------------------
# Parser
# ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="portionforge",
        description="Budget aggregation mechanisms, axiom audits, and exact impossibility checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    agg = sub.add_parser("aggregate", help="run a mechanism on a profile file")
    agg.add_argument("--mechanism", required=True, choices=MECHANISMS)
    agg.add_argument("--profile", required=True)
    agg.add_argument("--out")
    agg.add_argument("--format", choices=("json", "csv"), default="json")
    agg.add_argument("--cap", type=float, default=0.9)
    agg.set_defaults(func=cmd_aggregate)

    aud = sub.add_parser("audit", help="check an axiom for a mechanism")
    aud.add_argument("--axiom", required=True, choices=AXIOMS)
    aud.add_argument("--mechanism", required=True, choices=MECHANISMS)
    aud.add_argument("--model", choices=MODELS)
    aud.add_argument("--profile")
    aud.add_argument("--random", nargs=3, type=int, metavar=("N", "M", "TRIALS"))
    aud.add_argument("--seed", type=int, default=0)
    aud.add_argument("--resolution", type=int)
    aud.add_argument("--cap", type=float, default=0.9)
    aud.add_argument("--out")
    aud.add_argument("--timings", action="store_true")
    aud.set_defaults(func=cmd_audit)

    ver = sub.add_parser("verify-impossibility", help="certify a proof chain exactly")
    ver.add_argument("--model", required=True, choices=("l1", "linf"))
    ver.add_argument("--agents", required=True, type=int)
    ver.add_argument("--mechanism", choices=MECHANISMS)
    ver.add_argument("--cap", type=float, default=0.9)
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify_impossibility)

    orc = sub.add_parser("oracle", help="brute-force grid optimum of an objective")
    orc.add_argument("--objective", required=True, choices=("nash", "utilitarian"))
    orc.add_argument("--profile", required=True)
    orc.add_argument("--resolution", type=int, default=200)
    orc.add_argument("--out")
    orc.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except IncompatibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except np.linalg.LinAlgError as exc:  # defensive: solver breakdown
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
