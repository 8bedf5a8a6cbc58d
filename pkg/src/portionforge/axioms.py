"""Axiom deciders and manipulation audits.

Each checker returns an :class:`AuditReport` whose verdict is ``pass``,
``fail``, or ``inconclusive``.  A fail always carries a witness that can be
re-validated by evaluating the violated definition directly; a pass from a
search-based audit means "no violation found", which is evidence, not proof.
All randomized searches are seeded and deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    Distribution,
    Profile,
    UtilityModel,
    as_distribution,
    as_profile,
    critical_set,
    leximin_compare,
    utilities,
    utility,
)
from .numerics import grid_points, lp_minimize
from .welfare import decomposition_certificate

__all__ = [
    "AuditReport",
    "SearchConfig",
    "check_efficiency",
    "check_range_respect",
    "check_proportionality",
    "check_cfs_leontief",
    "blocking_witness_check",
    "audit_strategyproofness",
    "audit_group_sp",
    "audit_continuity",
]

Mechanism = Callable[[Profile], Distribution]

_NO_LOSS_TOL = 1e-9      # float noise allowance on "no member loses"


@dataclass
class AuditReport:
    axiom: str
    verdict: str                      # "pass" | "fail" | "inconclusive"
    witness: dict | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in ("pass", "fail", "inconclusive"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == "fail" and self.witness is None:
            raise ValueError("a fail verdict requires a witness")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "verdict": self.verdict,
            "witness": _jsonable(self.witness),
            "meta": _jsonable(self.meta),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Distribution):
        return [float(x) for x in obj.values]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass
class SearchConfig:
    """Deterministic search budget for manipulation audits."""

    grid_resolution: int = 20
    include_grid: bool = True
    include_targeted: bool = True
    extra_candidates: tuple = ()
    seed: int = 0
    margin: float = 1e-7          # strict-gain threshold
    max_joint: int = 20_000       # cap on joint misreport combinations per group


# ------------------------------------------------------------------
# Efficiency
# ------------------------------------------------------------------

def _improvement_lp(model: UtilityModel, peaks: np.ndarray, dist: np.ndarray):
    """max sum slack s.t. d_i(q') <= d_i(q) - slack_i, slack >= 0, q' in simplex."""
    n, m = peaks.shape
    d = np.array([-utility(model, peaks[i], dist) for i in range(n)])
    if model is UtilityModel.L1:
        # variables: q' (m), t (n*m), slack (n)
        nv = m + n * m + n
        A_ub, b_ub = [], []
        for i in range(n):
            for j in range(m):
                row = np.zeros(nv)
                row[j] = -1.0
                row[m + i * m + j] = -1.0
                A_ub.append(row)
                b_ub.append(-peaks[i, j])
                row = np.zeros(nv)
                row[j] = 1.0
                row[m + i * m + j] = -1.0
                A_ub.append(row)
                b_ub.append(peaks[i, j])
            row = np.zeros(nv)
            row[m + i * m : m + (i + 1) * m] = 1.0
            row[m + n * m + i] = 1.0
            A_ub.append(row)
            b_ub.append(d[i])
    else:  # LINF
        nv = m + n
        A_ub, b_ub = [], []
        for i in range(n):
            for j in range(m):
                row = np.zeros(nv)
                row[j] = -1.0
                row[m + i] = 1.0
                A_ub.append(row)
                b_ub.append(d[i] - peaks[i, j])
                row = np.zeros(nv)
                row[j] = 1.0
                row[m + i] = 1.0
                A_ub.append(row)
                b_ub.append(d[i] + peaks[i, j])
    A_eq = np.zeros((1, nv))
    A_eq[0, :m] = 1.0
    c = np.zeros(nv)
    c[-n:] = -1.0
    res = lp_minimize(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0])
    assert res.status == "optimal"
    return -res.objective, res.x[:m], res.x[-n:]


def check_efficiency(model, profile, q, eps: float = 1e-6) -> AuditReport:
    """Pareto efficiency of q for the profile under the given model.

    Leontief (and its leximin refinement): efficient iff every funded
    alternative is critical for some agent, decided directly.  l1 and linf:
    a linear program searches for a dominating q'.  l2 is nonlinear, so only
    a grid search runs and a clean pass is inconclusive.
    """
    model = UtilityModel.parse(model)
    prof = as_profile(profile)
    dist = as_distribution(q)

    if model in (UtilityModel.LEONTIEF, UtilityModel.LEXIMIN_LEONTIEF):
        covered: set[int] = set()
        for i in range(prof.n):
            covered |= critical_set(prof.peaks[i], dist, eps=eps)
        orphans = [
            j for j in range(prof.m) if dist.values[j] > 1e-7 and j not in covered
        ]
        if orphans:
            return AuditReport(
                "efficiency",
                "fail",
                witness={"uncovered_alternatives": orphans, "q": dist},
                meta={"model": model.value, "eps": eps},
            )
        return AuditReport("efficiency", "pass", meta={"model": model.value})

    if model in (UtilityModel.L1, UtilityModel.LINF):
        total_slack, q_prime, slacks = _improvement_lp(model, prof.peaks, dist.values)
        if total_slack > 1e-8:
            q_prime = np.maximum(q_prime, 0.0)
            q_prime /= q_prime.sum()
            return AuditReport(
                "efficiency",
                "fail",
                witness={
                    "improvement": Distribution(q_prime),
                    "slacks": slacks,
                    "total_slack": total_slack,
                },
                meta={"model": model.value},
            )
        return AuditReport(
            "efficiency", "pass", meta={"model": model.value, "lp_slack": total_slack}
        )

    # l2: grid fallback, not a decision procedure
    base = utilities(model, prof, dist)
    resolution = 40 if prof.m <= 3 else 12
    for row in grid_points(prof.m, resolution):
        vals = utilities(model, prof, Distribution(row))
        if np.all(vals >= base - 1e-12) and np.any(vals > base + 1e-8):
            return AuditReport(
                "efficiency",
                "fail",
                witness={"improvement": Distribution(row)},
                meta={"model": model.value, "method": "grid"},
            )
    return AuditReport(
        "efficiency",
        "inconclusive",
        meta={"model": model.value, "method": "grid", "resolution": resolution},
    )


def check_range_respect(profile, q, tol: float = 1e-9) -> AuditReport:
    """Every q_j must lie between the smallest and largest peak value of j."""
    prof = as_profile(profile)
    dist = as_distribution(q)
    lo = prof.peaks.min(axis=0)
    hi = prof.peaks.max(axis=0)
    for j in range(prof.m):
        if dist.values[j] < lo[j] - tol or dist.values[j] > hi[j] + tol:
            return AuditReport(
                "range-respect",
                "fail",
                witness={
                    "alternative": j,
                    "value": float(dist.values[j]),
                    "low": float(lo[j]),
                    "high": float(hi[j]),
                },
            )
    return AuditReport("range-respect", "pass")


# ------------------------------------------------------------------
# Proportionality
# ------------------------------------------------------------------

def check_proportionality(
    mechanism: Mechanism,
    n: int,
    m: int,
    tol: float = 1e-7,
    exhaustive_limit: int = 1_000_000,
    seed: int = 0,
    samples: int = 2000,
) -> AuditReport:
    """On single-minded profiles the output must equal the mean of the peaks.

    Exhausts all m^n vertex profiles when feasible, otherwise samples.
    """
    exhaustive = m**n <= exhaustive_limit
    if exhaustive:
        assignments: Iterable = itertools.product(range(m), repeat=n)
        count = m**n
    else:
        rng = np.random.default_rng(seed)
        assignments = (tuple(rng.integers(0, m, size=n)) for _ in range(samples))
        count = samples
    for choice in assignments:
        peaks = np.zeros((n, m))
        peaks[np.arange(n), list(choice)] = 1.0
        profile = Profile(peaks)
        target = peaks.mean(axis=0)
        out = mechanism(profile).values
        if np.abs(out - target).max() > tol:
            return AuditReport(
                "proportionality",
                "fail",
                witness={
                    "profile": peaks,
                    "output": out,
                    "expected": target,
                },
                meta={"exhaustive": exhaustive},
            )
    return AuditReport(
        "proportionality",
        "pass",
        meta={"exhaustive": exhaustive, "profiles_checked": count},
    )


# ------------------------------------------------------------------
# Core fair share (leontief)
# ------------------------------------------------------------------

def _group_blocks(peaks: np.ndarray, vals: np.ndarray, q: np.ndarray, group, n, tol):
    """Exact leontief blocking test for one group.

    A group G blocks iff some q' gives every member j in their support
    strictly more than u_i(q) p_ij per unit of the group's share |G|/n, no
    matter how the rest is placed; minimizing over the adversary's vertex
    placements reduces this to sum_j max_{i in G} u_i(q) p_ij < |G|/n.
    """
    bounds = np.zeros(q.size)
    for i in group:
        bounds = np.maximum(bounds, vals[i] * peaks[i])
    share = len(group) / n
    return bounds.sum() < share - tol, bounds, share


def check_cfs_leontief(
    profile,
    q,
    tol: float = 1e-9,
    exhaustive_limit: int = 16,
    seed: int = 0,
    samples: int = 4000,
) -> AuditReport:
    """Core fair share under leontief utilities.

    Weak and strong core fair share coincide for leontief utilities, so one
    closed-form test per group decides both.  Group enumeration is exhaustive
    up to ``exhaustive_limit`` agents; beyond that the sufficient Hall/flow
    condition plus sampled groups yield fail or inconclusive only.
    """
    prof = as_profile(profile)
    dist = as_distribution(q)
    vals = utilities(UtilityModel.LEONTIEF, prof, dist)
    n = prof.n

    def fail_report(group, bounds, share):
        base = bounds / share
        leftover = 1.0 - base.sum()
        q_prime = base + leftover / prof.m
        return AuditReport(
            "core-fair-share",
            "fail",
            witness={
                "group": sorted(group),
                "share": share,
                "q_prime": Distribution(q_prime),
                "bound_total": float(bounds.sum()),
            },
        )

    if n <= exhaustive_limit:
        for size in range(1, n + 1):
            for group in itertools.combinations(range(n), size):
                blocks, bounds, share = _group_blocks(
                    prof.peaks, vals, dist.values, group, n, tol
                )
                if blocks:
                    return fail_report(group, bounds, share)
        return AuditReport("core-fair-share", "pass", meta={"groups": 2**n - 1})

    cert = decomposition_certificate(prof, dist, eps=1e-7)
    if cert.ok:
        # Hall condition holds, which is sufficient for core fair share, but
        # the eps-criticality makes this a float statement, so stay cautious.
        return AuditReport(
            "core-fair-share", "inconclusive", meta={"hall_condition": "holds"}
        )
    if cert.cut_group:
        blocks, bounds, share = _group_blocks(
            prof.peaks, vals, dist.values, sorted(cert.cut_group), n, tol
        )
        if blocks:
            return fail_report(sorted(cert.cut_group), bounds, share)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        size = int(rng.integers(1, n + 1))
        group = tuple(sorted(rng.choice(n, size=size, replace=False)))
        blocks, bounds, share = _group_blocks(
            prof.peaks, vals, dist.values, group, n, tol
        )
        if blocks:
            return fail_report(group, bounds, share)
    return AuditReport(
        "core-fair-share", "inconclusive", meta={"sampled_groups": samples}
    )


def blocking_witness_check(
    model, profile, q, group: Sequence[int], qprime, qdoubleprime,
    margin: float = 0.0,
) -> bool:
    """Does (q', q'') witness a core objection by the group against q?

    Evaluates the definition for this single completion q'': every member
    weakly prefers |G|/n q' + (1 - |G|/n) q'' to q and at least one strictly
    does.  Callers quantifying over all completions check every simplex
    vertex; utilities here are concave in q'', so vertices are the worst case.
    """
    model = UtilityModel.parse(model)
    prof = as_profile(profile)
    if not group:
        raise ValueError("group must be nonempty")
    r = len(group) / prof.n
    mix = r * as_distribution(qprime).values + (1 - r) * as_distribution(
        qdoubleprime
    ).values
    mix_dist = Distribution(mix)
    base = as_distribution(q)
    weak, strict = True, False
    for i in group:
        peak = prof.peaks[i]
        if model is UtilityModel.LEXIMIN_LEONTIEF:
            order = leximin_compare(peak, mix_dist, base, tol=margin)
            weak &= order >= 0
            strict |= order > 0
        else:
            delta = utility(model, peak, mix_dist) - utility(model, peak, base)
            weak &= delta >= -margin
            strict |= delta > margin
    return weak and strict


# ------------------------------------------------------------------
# Manipulation audits
# ------------------------------------------------------------------

def _candidate_reports(profile: Profile, agent: int, baseline: Distribution,
                       cfg: SearchConfig) -> list[np.ndarray]:
    m = profile.m
    candidates: list[np.ndarray] = []
    if cfg.include_targeted:
        truth = profile.peaks[agent]
        candidates.append(truth.copy())
        candidates.append(baseline.values.copy())
        for j in range(m):
            vertex = np.zeros(m)
            vertex[j] = 1.0
            candidates.append(vertex)
        crit = sorted(critical_set(truth, baseline, eps=1e-9))
        restricted = np.zeros(m)
        restricted[crit] = truth[crit]
        if restricted.sum() > 0:
            candidates.append(restricted / restricted.sum())
        candidates.append(np.full(m, 1.0 / m))
    for extra in cfg.extra_candidates:
        candidates.append(as_distribution(extra).values.copy())
    if cfg.include_grid:
        candidates.extend(grid_points(m, cfg.grid_resolution))
    seen: set[bytes] = set()
    unique = []
    for cand in candidates:
        key = np.round(cand, 12).tobytes()
        if key not in seen:
            seen.add(key)
            unique.append(cand)
    return unique


def _prefers(model: UtilityModel, peak, new: Distribution, old: Distribution,
             margin: float) -> tuple[bool, float]:
    """(strictly prefers new, scalar gain). Leximin uses the ordinal compare."""
    if model is UtilityModel.LEXIMIN_LEONTIEF:
        order = leximin_compare(peak, new, old, tol=margin)
        gain = utility(UtilityModel.LEONTIEF, peak, new) - utility(
            UtilityModel.LEONTIEF, peak, old
        )
        return order > 0, gain
    gain = utility(model, peak, new) - utility(model, peak, old)
    return gain > margin, gain


def audit_strategyproofness(
    mechanism: Mechanism, model, profile, config: SearchConfig | None = None
) -> AuditReport:
    """Search single-agent misreports for a profitable deviation.

    Candidates per agent: a simplex grid, targeted points (truth, the current
    output, vertices, the peak restricted to its critical set, uniform), and
    any caller-supplied extras.  A pass means no manipulation found.
    """
    cfg = config or SearchConfig()
    model = UtilityModel.parse(model)
    prof = as_profile(profile)
    baseline = mechanism(prof)
    scalar = UtilityModel.LEONTIEF if model is UtilityModel.LEXIMIN_LEONTIEF else model
    manipulations: list[dict] = []
    for agent in range(prof.n):
        truth = prof.peaks[agent]
        base_value = utility(scalar, truth, baseline)
        for cand in _candidate_reports(prof, agent, baseline, cfg):
            outcome = mechanism(prof.with_peak(agent, cand))
            gain = utility(scalar, truth, outcome) - base_value
            if model is UtilityModel.LEXIMIN_LEONTIEF:
                better = leximin_compare(truth, outcome, baseline, tol=cfg.margin) > 0
            else:
                better = gain > cfg.margin
            if better:
                manipulations.append(
                    {
                        "agent": agent,
                        "misreport": cand,
                        "outcome": outcome,
                        "gain": gain,
                    }
                )
    meta = {"model": model.value, "truthful_outcome": baseline,
            "candidates": "grid+targeted" if cfg.include_grid else "targeted"}
    if manipulations:
        best = max(manipulations, key=lambda w: w["gain"])
        return AuditReport(
            "strategyproofness",
            "fail",
            witness={"best": best, "manipulations": manipulations},
            meta=meta,
        )
    return AuditReport("strategyproofness", "pass", meta=meta)


def audit_group_sp(
    mechanism: Mechanism,
    model,
    profile,
    max_group_size: int = 2,
    config: SearchConfig | None = None,
) -> AuditReport:
    """Search joint misreports where no member loses and one strictly gains."""
    if max_group_size > 3:
        raise ValueError("joint grid search is limited to groups of size 3")
    cfg = config or SearchConfig(include_grid=False)
    model = UtilityModel.parse(model)
    prof = as_profile(profile)
    baseline = mechanism(prof)
    rng = np.random.default_rng(cfg.seed)

    for size in range(1, min(max_group_size, prof.n) + 1):
        for group in itertools.combinations(range(prof.n), size):
            per_member = [
                _candidate_reports(prof, i, baseline, cfg) for i in group
            ]
            total = int(np.prod([len(c) for c in per_member]))
            if total <= cfg.max_joint:
                joint = itertools.product(*per_member)
            else:
                joint = (
                    tuple(cands[rng.integers(len(cands))] for cands in per_member)
                    for _ in range(cfg.max_joint)
                )
            for reports in joint:
                candidate_profile = prof
                for i, rep in zip(group, reports):
                    candidate_profile = candidate_profile.with_peak(i, rep)
                outcome = mechanism(candidate_profile)
                worst, best_gain, any_strict = np.inf, -np.inf, False
                for i in group:
                    strictly, gain = _prefers(
                        model, prof.peaks[i], outcome, baseline, cfg.margin
                    )
                    if model is UtilityModel.LEXIMIN_LEONTIEF:
                        order = leximin_compare(
                            prof.peaks[i], outcome, baseline, tol=cfg.margin
                        )
                        worst = min(worst, order)
                    else:
                        worst = min(worst, gain)
                    best_gain = max(best_gain, gain)
                    any_strict |= strictly
                no_loss = worst >= (0 if model is UtilityModel.LEXIMIN_LEONTIEF
                                    else -_NO_LOSS_TOL)
                if no_loss and any_strict:
                    return AuditReport(
                        "group-strategyproofness",
                        "fail",
                        witness={
                            "group": list(group),
                            "misreports": [r for r in reports],
                            "outcome": outcome,
                            "best_gain": best_gain,
                        },
                        meta={"model": model.value},
                    )
    return AuditReport(
        "group-strategyproofness",
        "pass",
        meta={"model": model.value, "max_group_size": max_group_size},
    )


def audit_continuity(
    mechanism: Mechanism,
    profile,
    deltas: Sequence[float] = (1e-2, 1e-3, 1e-4),
    samples: int = 8,
    seed: int = 0,
) -> AuditReport:
    """Diagnostic trend check: output displacement must shrink with input size.

    The same unit perturbation directions are reused at every delta, so for a
    continuous mechanism the displacement sequence is nonincreasing and ends
    well below where it starts.  This is a heuristic, not a proof of
    (dis)continuity.
    """
    if any(a <= b for a, b in zip(deltas, list(deltas)[1:])):
        raise ValueError("deltas must be positive and decreasing")
    prof = as_profile(profile)
    rng = np.random.default_rng(seed)
    base = mechanism(prof).values

    directions = []
    for _ in range(samples):
        d = rng.normal(size=prof.peaks.shape)
        d -= d.mean(axis=1, keepdims=True)      # keep rows on the sum-1 plane
        d /= np.abs(d).sum()
        directions.append(d)

    def displacement(delta: float) -> float:
        worst = 0.0
        for d in directions:
            peaks = np.clip(prof.peaks + delta * d, 0.0, None)
            peaks /= peaks.sum(axis=1, keepdims=True)
            out = mechanism(Profile(peaks)).values
            worst = max(worst, float(np.abs(out - base).sum()))
        return worst

    series = [displacement(d) for d in deltas]
    monotone = all(b <= a + 1e-9 for a, b in zip(series, series[1:]))
    shrinks = series[-1] <= max(0.5 * series[0], 1e-6)
    meta = {"deltas": list(deltas), "displacements": series}
    if monotone and shrinks:
        return AuditReport("continuity", "pass", meta=meta)
    return AuditReport(
        "continuity",
        "fail",
        witness={"deltas": list(deltas), "displacements": series},
        meta=meta,
    )
