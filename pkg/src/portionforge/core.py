"""Domain types and utility evaluation.

A *distribution* is a point of the standard simplex: nonnegative shares of a
unit budget over m alternatives.  A *profile* stacks the n agents' ideal
distributions (peaks) as rows of an n x m matrix.  Every utility model here is
peak-linear: utility is affine along any segment through the peak, so a peak
pins down the whole function.

Supported models
----------------
l1, l2, linf   metric disutilities, u_i(q) = -||p_i - q||_p (0 at the peak)
leontief       u_i(q) = min over supported j of q_j / p_{i,j}, in [0, 1]
leximin-leontief   ordinal refinement of leontief; compare with
                   :func:`leximin_compare`, it has no scalar utility
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

EPS_SUM = 1e-9       # simplex membership tolerance
EPS_RATIO = 1e-9     # default tolerance for criticality ties

__all__ = [
    "EPS_SUM",
    "EPS_RATIO",
    "Distribution",
    "Profile",
    "UtilityModel",
    "RatioVector",
    "as_distribution",
    "as_profile",
    "utility",
    "utilities",
    "critical_set",
    "ratio_vector",
    "leximin_compare",
    "mean_rule",
    "is_single_minded",
]


class UtilityModel(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    LEONTIEF = "leontief"
    LEXIMIN_LEONTIEF = "leximin-leontief"

    @staticmethod
    def parse(value: "UtilityModel | str") -> "UtilityModel":
        if isinstance(value, UtilityModel):
            return value
        return UtilityModel(str(value).lower())


class Distribution:
    """An immutable point of the m-simplex.

    Inputs whose total is within ``EPS_SUM`` of 1 are renormalized exactly;
    anything further off, or any negative entry, is rejected.
    """

    __slots__ = ("values",)

    def __init__(self, entries: Iterable[float]):
        q = np.array(list(entries), dtype=float)
        if q.ndim != 1 or q.size < 1:
            raise ValueError("a distribution is a flat nonempty vector")
        if np.any(q < 0):
            raise ValueError(f"negative budget share in {q}")
        total = float(q.sum())
        if abs(total - 1.0) > EPS_SUM:
            raise ValueError(f"shares sum to {total}, not 1")
        if total != 1.0:
            q = q / total
        # land on an exact unit sum so normalization is idempotent and
        # serialization round-trips bit-for-bit
        for _ in range(3):
            residual = 1.0 - q.sum()
            if residual == 0.0:
                break
            q = q.copy()
            q[int(np.argmax(q))] += residual
        q.flags.writeable = False
        object.__setattr__(self, "values", q)

    def __setattr__(self, *args):  # pragma: no cover - immutability guard
        raise AttributeError("Distribution is immutable")

    @property
    def m(self) -> int:
        return self.values.size

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values > 0)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, j: int) -> float:
        return float(self.values[j])

    def __eq__(self, other) -> bool:
        return isinstance(other, Distribution) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        body = ", ".join(f"{x:.6g}" for x in self.values)
        return f"Distribution([{body}])"


class Profile:
    """An immutable n x m matrix of agent peaks (each row a Distribution)."""

    __slots__ = ("peaks",)

    def __init__(self, peaks: Iterable):
        rows = [as_distribution(row).values for row in peaks]
        if not rows:
            raise ValueError("a profile needs at least one agent")
        width = {row.size for row in rows}
        if len(width) != 1:
            raise ValueError("all peaks must have the same number of alternatives")
        if rows[0].size < 2:
            raise ValueError("a profile needs at least two alternatives")
        matrix = np.vstack(rows)
        matrix.flags.writeable = False
        object.__setattr__(self, "peaks", matrix)

    def __setattr__(self, *args):  # pragma: no cover - immutability guard
        raise AttributeError("Profile is immutable")

    @property
    def n(self) -> int:
        return self.peaks.shape[0]

    @property
    def m(self) -> int:
        return self.peaks.shape[1]

    def peak(self, i: int) -> Distribution:
        return Distribution(self.peaks[i])

    def without_agent(self, i: int) -> "Profile":
        keep = [r for r in range(self.n) if r != i]
        return Profile(self.peaks[keep])

    def with_peak(self, i: int, peak) -> "Profile":
        rows = self.peaks.copy()
        rows[i] = as_distribution(peak).values
        return Profile(rows)

    def permute_agents(self, order: Sequence[int]) -> "Profile":
        return Profile(self.peaks[list(order)])

    def permute_alternatives(self, order: Sequence[int]) -> "Profile":
        return Profile(self.peaks[:, list(order)])

    def __eq__(self, other) -> bool:
        return isinstance(other, Profile) and np.array_equal(self.peaks, other.peaks)

    def __hash__(self) -> int:
        return hash(self.peaks.tobytes())

    def __repr__(self) -> str:
        return f"Profile(n={self.n}, m={self.m})"


def as_distribution(value) -> Distribution:
    return value if isinstance(value, Distribution) else Distribution(value)


def as_profile(value) -> Profile:
    return value if isinstance(value, Profile) else Profile(value)


# ------------------------------------------------------------------
# Utility evaluation
# ------------------------------------------------------------------

def _ratios(peak: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ratios q_j / p_j over the peak's support.  Zero-peak alternatives never count."""
    support = np.flatnonzero(peak > 0)
    return support, q[support] / peak[support]


def utility(model, peak, q) -> float:
    """Scalar utility of distribution q for an agent with the given peak.

    Metric models return 0 exactly at the peak, leontief returns 1 there.
    The leximin refinement has no scalar utility; use :func:`leximin_compare`.
    """
    model = UtilityModel.parse(model)
    p = as_distribution(peak).values
    x = as_distribution(q).values
    if p.size != x.size:
        raise ValueError("peak and distribution dimensions differ")
    if model is UtilityModel.LEXIMIN_LEONTIEF:
        raise ValueError("leximin-leontief is ordinal; use leximin_compare")
    if model is UtilityModel.LEONTIEF:
        if np.array_equal(p, x):
            return 1.0
        _, ratios = _ratios(p, x)
        return float(ratios.min())
    diff = p - x
    if np.array_equal(p, x):
        return 0.0
    if model is UtilityModel.L1:
        return float(-np.abs(diff).sum())
    if model is UtilityModel.L2:
        return float(-np.sqrt((diff * diff).sum()))
    return float(-np.abs(diff).max())


def utilities(model, profile, q) -> np.ndarray:
    prof = as_profile(profile)
    return np.array([utility(model, prof.peaks[i], q) for i in range(prof.n)])


def critical_set(peak, q, eps: float = 0.0) -> set[int]:
    """Alternatives within eps of the agent's smallest ratio q_j / p_j.

    With eps = 0 this is the exact set of critical alternatives.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    p = as_distribution(peak).values
    x = as_distribution(q).values
    if p.size != x.size:
        raise ValueError("peak and distribution dimensions differ")
    support, ratios = _ratios(p, x)
    cutoff = ratios.min() + eps
    return {int(j) for j, r in zip(support, ratios) if r <= cutoff}


@dataclass(frozen=True)
class RatioVector:
    """Ascending ratios q_j / p_j over the peak's support, with their alternatives.

    The first ratio equals the leontief utility; the full vector is the object
    the leximin refinement compares.
    """

    ratios: tuple[float, ...]
    alternatives: tuple[int, ...]

    def __post_init__(self):
        if not self.ratios:
            raise ValueError("empty support")
        if any(a > b for a, b in zip(self.ratios, self.ratios[1:])):
            raise ValueError("ratios must be ascending")


def ratio_vector(peak, q) -> RatioVector:
    p = as_distribution(peak).values
    x = as_distribution(q).values
    if p.size != x.size:
        raise ValueError("peak and distribution dimensions differ")
    support, ratios = _ratios(p, x)
    order = np.lexsort((support, ratios))
    return RatioVector(
        tuple(float(ratios[k]) for k in order),
        tuple(int(support[k]) for k in order),
    )


def leximin_compare(peak, q1, q2, tol: float = 0.0) -> int:
    """Leximin order of q1 versus q2 for one agent: +1, 0, -1.

    Sorted ratio vectors are compared lexicographically; +1 means the agent
    strictly prefers q1.  Entries closer than ``tol`` count as tied.
    """
    r1 = ratio_vector(peak, q1).ratios
    r2 = ratio_vector(peak, q2).ratios
    for a, b in zip(r1, r2):
        if a > b + tol:
            return 1
        if b > a + tol:
            return -1
    return 0


# ------------------------------------------------------------------
# Baselines and profile predicates
# ------------------------------------------------------------------

def mean_rule(profile) -> Distribution:
    """Coordinate-wise arithmetic mean of the peaks."""
    prof = as_profile(profile)
    return Distribution(prof.peaks.mean(axis=0))


def is_single_minded(profile) -> bool:
    """True iff every peak is a vertex of the simplex (within EPS_SUM)."""
    prof = as_profile(profile)
    return bool(np.all(prof.peaks.max(axis=1) >= 1.0 - EPS_SUM))
