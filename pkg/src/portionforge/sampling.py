"""Seeded random instance generators shared by audits, demos, and tests."""

from __future__ import annotations

import numpy as np

from .core import Profile

__all__ = ["random_profile", "random_profiles"]


def random_profile(
    rng: np.random.Generator, n: int, m: int, zero_prob: float = 0.0
) -> Profile:
    """Dirichlet peaks; with ``zero_prob`` some shares are zeroed per agent.

    Every agent keeps at least one positive share.
    """
    peaks = rng.dirichlet(np.ones(m), size=n)
    if zero_prob > 0:
        mask = rng.random((n, m)) < zero_prob
        keep = np.argmax(peaks, axis=1)
        mask[np.arange(n), keep] = False
        peaks = np.where(mask, 0.0, peaks)
        peaks /= peaks.sum(axis=1, keepdims=True)
    return Profile(peaks)


def random_profiles(
    seed: int,
    count: int,
    n_max: int,
    m_max: int,
    n_min: int = 1,
    m_min: int = 2,
    zero_prob: float = 0.0,
):
    """A deterministic stream of profiles with sizes drawn uniformly."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        m = int(rng.integers(m_min, m_max + 1))
        yield random_profile(rng, n, m, zero_prob=zero_prob)
