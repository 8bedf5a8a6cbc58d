"""Moving-phantom mechanisms for any number of alternatives.

A phantom system is a family of n+1 functions h_0 <= ... <= h_n, each rising
continuously from 0 at t=0 to 1 at t=1.  At time t the mechanism takes, per
alternative, the median of the n peak values and the n+1 phantom values; the
per-alternative medians sum to at most 1 at t=0 and to at least 1 at t=1, and
the mechanism returns them at the first time t* where they sum to exactly 1.

The independent-markets instance uses h_k(t) = min(k*t, 1).  The capped
nearest-point rule (a single-agent mechanism that no phantom system can
represent) also lives here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import Distribution, Profile, as_distribution, as_profile

EPS_T = 1e-12          # bisection tolerance on the time axis
_BISECT_STEPS = 84     # alternating scheme still halves every other step
_PROBE_POINTS = 33     # monotonicity probe resolution

__all__ = [
    "PhantomSystem",
    "independent_markets_system",
    "uniform_median_system",
    "normalization_time",
    "moving_phantom",
    "independent_markets",
    "capped_nearest",
]


@dataclass(frozen=True)
class PhantomSystem:
    """k_count phantom trajectories, evaluated as eval(k, t) for k < k_count.

    ``eval_all`` is an optional vectorized evaluator t -> array of k_count
    values; when present it must agree with ``eval``.
    """

    k_count: int
    eval: Callable[[int, float], float]
    eval_all: Callable[[float], np.ndarray] | None = None

    def values(self, t: float) -> np.ndarray:
        if self.eval_all is not None:
            return np.asarray(self.eval_all(t), dtype=float)
        return np.array([self.eval(k, t) for k in range(self.k_count)], dtype=float)

    def validate(self) -> None:
        """Probe the monotonicity and boundary contract on a fixed grid.

        The bottom phantom may stay at 0 (the independent-markets family does
        exactly that); what normalization needs is that all phantoms start at
        0, never decrease, and enough of them reach 1 for the median sum to
        reach 1, which :func:`normalization_time` checks on the profile.
        """
        grid = np.linspace(0.0, 1.0, _PROBE_POINTS)
        prev = None
        for t in grid:
            vals = self.values(float(t))
            if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12):
                raise ValueError(f"phantom values outside [0, 1] at t={t}")
            if np.any(np.diff(vals) < -1e-12):
                raise ValueError(f"phantoms not sorted in k at t={t}")
            if prev is not None and np.any(vals < prev - 1e-12):
                raise ValueError(f"phantoms decreasing in t near t={t}")
            prev = vals
        if np.any(self.values(0.0) > 1e-12):
            raise ValueError("phantoms must start at 0")
        if self.values(1.0)[-1] < 1 - 1e-12:
            raise ValueError("the top phantom must reach 1 at t=1")
        _VALIDATED.add(id(self))


_VALIDATED: set[int] = set()


@lru_cache(maxsize=128)
def independent_markets_system(n: int) -> PhantomSystem:
    return PhantomSystem(
        n + 1,
        lambda k, t: min(k * t, 1.0),
        eval_all=lambda t, _ks=np.arange(n + 1, dtype=float): np.minimum(_ks * t, 1.0),
    )


@lru_cache(maxsize=128)
def uniform_median_system(n: int) -> PhantomSystem:
    """All phantoms move together: h_k(t) = t.  For m = 2 this is not the
    uniform phantom rule; it is the plain coordinate median, normalized."""
    return PhantomSystem(
        n + 1,
        lambda k, t: t,
        eval_all=lambda t, _n=n: np.full(_n + 1, float(t)),
    )


def _median_sum(peaks: np.ndarray, phantoms: np.ndarray) -> np.ndarray:
    n, m = peaks.shape
    stacked = np.empty((2 * n + 1, m))
    stacked[:n] = peaks
    stacked[n:] = phantoms[:, None]
    # (n+1)-th order statistic of 2n+1 values
    return np.partition(stacked, n, axis=0)[n]


def normalization_time(profile, system: PhantomSystem) -> tuple[float, np.ndarray]:
    """Smallest time where the per-alternative medians sum to 1, with those medians.

    S(t) = sum of medians is continuous and nondecreasing with S(0) <= 1 <= S(1);
    bisection keeps the invariant S(lo) < 1 <= S(hi), so it converges to the
    left edge of any tie plateau.
    """
    prof = as_profile(profile)
    if id(system) not in _VALIDATED:
        system.validate()

    def medians(t: float) -> np.ndarray:
        return _median_sum(prof.peaks, system.values(t))

    n = prof.n
    if prof.peaks.size <= 64:
        # plain python beats numpy dispatch at these sizes, and the search
        # only needs the scalar sum until the final evaluation
        columns = [list(col) for col in prof.peaks.T]
        values = system.values

        def median_total(t: float) -> float:
            phantom = list(values(t))
            total = 0.0
            for col in columns:
                merged = col + phantom
                merged.sort()
                total += merged[n]
            return total
    else:
        def median_total(t: float) -> float:
            return float(medians(t).sum())

    s_hi = medians(1.0).sum()
    if s_hi < 1.0 - 1e-12:
        raise ValueError("phantom system cannot normalize: median sum stays below 1")
    lo, hi = 0.0, 1.0
    s_lo = median_total(lo)
    if s_lo >= 1.0:
        return lo, medians(lo)
    # alternate bisection with bracketed secant steps: the median sum is
    # piecewise linear and nondecreasing in t, so the secant lands on the
    # crossing as soon as the bracket sits inside one linear piece, while the
    # interleaved bisection guarantees the bracket keeps halving
    for step in range(_BISECT_STEPS):
        if hi - lo <= EPS_T:
            break
        if step % 2 == 0:
            mid = 0.5 * (lo + hi)
        else:
            span = s_hi - s_lo
            mid = lo + (hi - lo) * ((1.0 - s_lo) / span if span > 0 else 0.5)
            mid = min(max(mid, lo + 0.25 * EPS_T), hi - 0.25 * EPS_T)
        s_mid = median_total(mid)
        if s_mid >= 1.0:
            hi, s_hi = mid, s_mid
        else:
            lo, s_lo = mid, s_mid
    return hi, medians(hi)


def moving_phantom(profile, system: PhantomSystem) -> Distribution:
    """Run a phantom system: bisect for the normalization time, return the medians.

    The medians at t* are rescaled by their sum (a residual below 1e-9) to
    return an exact simplex point.
    """
    _, q = normalization_time(profile, system)
    total = q.sum()
    if abs(total - 1.0) > 1e-9:
        raise ArithmeticError(f"normalization failed: medians sum to {total}")
    return Distribution(q / total)


def independent_markets(profile) -> Distribution:
    """Moving-phantom mechanism with h_k(t) = min(k*t, 1)."""
    prof = as_profile(profile)
    return moving_phantom(prof, independent_markets_system(prof.n))


def capped_nearest(peak, cap: float = 0.9) -> Distribution:
    """Return the (single) agent's peak, but never more than ``cap`` on one alternative.

    Any overflow above the cap is split equally over the other m-1
    alternatives, which keeps the rule continuous, neutral, and an exact
    nearest point of the capped region in l1 distance.
    """
    p = as_distribution(peak)
    m = p.m
    if m < 3:
        raise ValueError("capped_nearest needs at least three alternatives")
    if not (1.0 / m < cap <= 1.0):
        raise ValueError(f"cap must lie in (1/{m}, 1]")
    values = p.values
    over = np.flatnonzero(values > cap)
    if over.size == 0:
        return p
    if over.size > 1:
        # impossible for cap >= 1/2; smaller caps make the split rule ambiguous
        raise ValueError("more than one share above the cap")
    j = int(over[0])
    surplus = values[j] - cap
    q = values + surplus / (m - 1)
    q[j] = cap
    return Distribution(q)
