"""Mechanisms for two alternatives, where an outcome is a scalar in [0, 1].

A peak p stands for the distribution (1-p, p): p is the share of the second
alternative.  All functions below are pure order-statistic computations, so
they are exact on ``fractions.Fraction`` inputs and plain floats alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import chain, combinations
from typing import Mapping, Sequence

__all__ = [
    "PhantomVector",
    "median",
    "generalized_median",
    "uniform_phantom",
    "uniform_phantoms",
    "maxmin_rule",
]


def _check_unit(values, what: str) -> None:
    for v in values:
        if v < 0 or v > 1:
            raise ValueError(f"{what} {v} outside [0, 1]")


def median(values: Sequence):
    """Middle order statistic of an odd-length multiset."""
    ordered = sorted(values)
    if len(ordered) % 2 == 0:
        raise ValueError("median here is defined for odd-length multisets")
    return ordered[len(ordered) // 2]


@dataclass(frozen=True)
class PhantomVector:
    """Nondecreasing phantom values in [0, 1]."""

    alphas: tuple

    def __post_init__(self):
        _check_unit(self.alphas, "phantom")
        if any(a > b for a, b in zip(self.alphas, self.alphas[1:])):
            raise ValueError("phantoms must be nondecreasing")

    def __len__(self) -> int:
        return len(self.alphas)

    def __iter__(self):
        return iter(self.alphas)


def generalized_median(peaks: Sequence, phantoms):
    """Median of the n peaks together with fixed phantom values.

    Accepts n+1 phantoms (the anonymous strategyproof family) or n-1 phantoms
    (the efficient sub-family); either way the multiset has odd size, so the
    median is a plain order statistic with no tie ambiguity.
    """
    peaks = list(peaks)
    if not peaks:
        raise ValueError("at least one peak required")
    _check_unit(peaks, "peak")
    alphas = list(phantoms.alphas if isinstance(phantoms, PhantomVector) else phantoms)
    n = len(peaks)
    if len(alphas) not in (n - 1, n + 1):
        raise ValueError(
            f"expected {n - 1} or {n + 1} phantoms for {n} peaks, got {len(alphas)}"
        )
    PhantomVector(tuple(alphas))  # validates range and ordering
    return median(peaks + alphas)


def uniform_phantoms(n: int) -> PhantomVector:
    """The phantom vector alpha_k = k/n, k = 0..n."""
    return PhantomVector(tuple(Fraction(k, n) for k in range(n + 1)))


def uniform_phantom(peaks: Sequence):
    """Generalized median against phantoms spread uniformly over [0, 1].

    The unique continuous strategyproof rule that is proportional on
    single-minded profiles; exact on rational inputs.
    """
    peaks = list(peaks)
    if not peaks:
        raise ValueError("at least one peak required")
    value = generalized_median(peaks, uniform_phantoms(len(peaks)))
    if all(isinstance(p, (int, Fraction)) for p in peaks):
        return value
    return float(value)


def maxmin_rule(peaks: Sequence, alpha_map: Mapping[frozenset, object]):
    """max over agent subsets G of min(alpha_G, min_{i in G} p_i).

    ``alpha_map`` must be total over all 2^n subsets of agent indices
    (frozenset keys).  The empty subset contributes alpha_{} alone, since its
    inner minimum over agents is vacuous.
    """
    peaks = list(peaks)
    _check_unit(peaks, "peak")
    n = len(peaks)
    agents = range(n)
    best = None
    for group in chain.from_iterable(
        combinations(agents, size) for size in range(n + 1)
    ):
        key = frozenset(group)
        if key not in alpha_map:
            raise KeyError(f"alpha_map missing subset {set(key) or '{}'}")
        alpha = alpha_map[key]
        _check_unit([alpha], "alpha")
        term = alpha
        for i in group:
            term = min(term, peaks[i])
        best = term if best is None else max(best, term)
    return best
