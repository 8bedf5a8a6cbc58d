"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from portionforge.core import Distribution, Profile, UtilityModel, utility


@pytest.fixture
def example_profile() -> Profile:
    """Two agents splitting 4/5 vs 1/5 across disjoint minor alternatives."""
    return Profile([[0.8, 0.2, 0.0], [0.8, 0.0, 0.2]])


@pytest.fixture
def misreport_profile() -> Profile:
    """The same instance after agent 0 shades their report."""
    return Profile([[0.82, 0.18, 0.0], [0.8, 0.0, 0.2]])


def step_rule(profile: Profile) -> Distribution:
    """Discontinuous but strategyproof two-alternative rule used as a fixture."""
    x = float(profile.peaks[0, 1])
    return Distribution([1.0, 0.0]) if x < 0.5 else Distribution([0.0, 1.0])


def scalar_utility(model, peak: float, x: float) -> float:
    """Single-peaked utility of outcome x in [0,1] for a two-alternative peak."""
    return utility(model, [1.0 - peak, peak], [1.0 - x, x])


def scalar_leximin_key(peak: float, x: float) -> tuple:
    """Sorted ratio vector of the outcome for leximin comparisons on [0,1]."""
    p = np.array([1.0 - peak, peak])
    q = np.array([1.0 - x, x])
    support = np.flatnonzero(p > 0)
    return tuple(sorted(q[support] / p[support]))


SCALAR_MODELS = (
    UtilityModel.L1,
    UtilityModel.L2,
    UtilityModel.LINF,
    UtilityModel.LEONTIEF,
)


def brute_force_cfs_blocking(
    profile: Profile, q: Distribution, resolution: int = 50
) -> dict | None:
    """Grid oracle for the leontief core objection test.

    Searches every group, every lattice q', and every vertex completion q'';
    a group blocks when some q' beats q for all members against all vertex
    completions.  Returns the first blocking witness or None.
    """
    from portionforge.numerics import grid_points

    n, m = profile.n, profile.m
    peaks = profile.peaks
    base = np.array(
        [utility(UtilityModel.LEONTIEF, peaks[i], q) for i in range(n)]
    )
    lattice = grid_points(m, resolution)
    vertices = np.eye(m)
    for size in range(1, n + 1):
        for group in itertools.combinations(range(n), size):
            r = size / n
            good = np.ones(len(lattice), dtype=bool)
            for vertex in vertices:
                mixes = r * lattice + (1 - r) * vertex
                for i in group:
                    support = np.flatnonzero(peaks[i] > 0)
                    vals = (mixes[:, support] / peaks[i][support]).min(axis=1)
                    good &= vals > base[i]
                if not good.any():
                    break
            if good.any():
                return {"group": group, "q_prime": lattice[np.argmax(good)]}
    return None
