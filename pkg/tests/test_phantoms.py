"""Moving-phantom mechanisms and the capped nearest-point rule."""

import itertools

import numpy as np
import pytest

from portionforge.axioms import SearchConfig, audit_strategyproofness
from portionforge.core import Distribution, Profile, mean_rule, utilities
from portionforge.phantoms import (
    PhantomSystem,
    capped_nearest,
    independent_markets,
    independent_markets_system,
    moving_phantom,
    normalization_time,
    uniform_median_system,
)
from portionforge.sampling import random_profile


class TestIndependentMarkets:
    def test_equal_minorities(self, example_profile):
        out = independent_markets(example_profile)
        assert np.abs(out.values - [0.6, 0.2, 0.2]).max() < 1e-9
        assert np.allclose(
            utilities("leontief", example_profile, out), [0.75, 0.75]
        )

    def test_shaded_report_shifts_the_split(self, misreport_profile):
        out = independent_markets(misreport_profile)
        assert np.abs(out.values - [0.62, 0.18, 0.2]).max() < 1e-9

    def test_normalization_times(self, example_profile, misreport_profile):
        t1, _ = normalization_time(example_profile, independent_markets_system(2))
        t2, _ = normalization_time(misreport_profile, independent_markets_system(2))
        assert t1 == pytest.approx(0.30, abs=1e-9)
        assert t2 == pytest.approx(0.31, abs=1e-9)

    def test_single_agent_returns_peak(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            prof = random_profile(rng, 1, int(rng.integers(2, 6)))
            out = independent_markets(prof)
            assert np.abs(out.values - prof.peaks[0]).max() < 1e-9

    def test_unanimous_profile_returns_common_peak(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            peak = random_profile(rng, 1, 4).peaks[0]
            prof = Profile([peak] * int(rng.integers(2, 6)))
            out = independent_markets(prof)
            assert np.abs(out.values - peak).max() < 1e-9

    def test_proportional_on_all_single_minded_profiles(self):
        for n in range(1, 7):
            for m in (2, 3, 4):
                if m**n > 4096:
                    continue
                for choice in itertools.product(range(m), repeat=n):
                    peaks = np.zeros((n, m))
                    peaks[np.arange(n), list(choice)] = 1.0
                    prof = Profile(peaks)
                    out = independent_markets(prof)
                    assert np.abs(out.values - peaks.mean(axis=0)).max() < 1e-9

    def test_anonymous_and_neutral(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            prof = random_profile(rng, n, m)
            out = independent_markets(prof).values
            agents = rng.permutation(n)
            assert np.abs(
                independent_markets(prof.permute_agents(agents)).values - out
            ).max() < 1e-9
            alts = rng.permutation(m)
            permuted = independent_markets(prof.permute_alternatives(alts)).values
            assert np.abs(permuted - out[alts]).max() < 1e-9

    def test_l1_strategyproofness_on_random_profiles(self):
        rng = np.random.default_rng(7)
        cfg = SearchConfig(grid_resolution=12)
        for trial in range(60):
            n, m = int(rng.integers(1, 5)), int(rng.integers(2, 5))
            prof = random_profile(rng, n, m, zero_prob=0.3)
            report = audit_strategyproofness(independent_markets, "l1", prof, cfg)
            assert report.passed, (trial, report.witness["best"])

    def test_leontief_manipulation_found(self, example_profile):
        report = audit_strategyproofness(
            independent_markets, "leontief", example_profile,
            SearchConfig(grid_resolution=50),
        )
        assert report.verdict == "fail"
        assert report.witness["best"]["gain"] >= 0.025 - 1e-9


class TestMovingPhantomFramework:
    def test_rejects_nonmonotone_system(self):
        bad = PhantomSystem(3, lambda k, t: (1 - t) if k == 2 else t)
        with pytest.raises(ValueError):
            moving_phantom(Profile([[0.5, 0.5], [0.2, 0.8]]), bad)

    def test_rejects_unsorted_system(self):
        bad = PhantomSystem(3, lambda k, t: t * (1.0 - 0.4 * k))
        with pytest.raises(ValueError):
            moving_phantom(Profile([[0.5, 0.5], [0.2, 0.8]]), bad)

    def test_uniform_median_system_runs(self):
        prof = Profile([[0.7, 0.3], [0.1, 0.9], [0.4, 0.6]])
        out = moving_phantom(prof, uniform_median_system(3))
        assert out.values.sum() == pytest.approx(1.0, abs=1e-12)

    def test_smallest_normalization_time_is_returned(self):
        # all-phantoms-together on a single-minded profile plateaus at t = 1/m
        prof = Profile([[1.0, 0.0], [1.0, 0.0]])
        t, _ = normalization_time(prof, uniform_median_system(2))
        assert t == pytest.approx(0.5, abs=1e-9)


class TestCappedNearest:
    def test_surplus_split(self):
        out = capped_nearest([0.91, 0.08, 0.01], cap=0.9)
        assert np.abs(out.values - [0.9, 0.085, 0.015]).max() < 1e-12

    def test_identity_under_cap(self):
        out = capped_nearest([0.5, 0.3, 0.2], cap=0.9)
        assert np.allclose(out.values, [0.5, 0.3, 0.2])

    def test_vertex_peak(self):
        out = capped_nearest([1.0, 0.0, 0.0], cap=0.9)
        assert np.abs(out.values - [0.9, 0.05, 0.05]).max() < 1e-12

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            capped_nearest([0.6, 0.4], cap=0.9)          # needs m >= 3
        with pytest.raises(ValueError):
            capped_nearest([0.5, 0.3, 0.2], cap=0.2)     # cap below 1/m
        with pytest.raises(ValueError):
            capped_nearest([0.45, 0.45, 0.1], cap=0.4)   # two shares above cap

    def test_continuity_probe_near_the_cap(self):
        for eps in (1e-3, 1e-6, 1e-9):
            below = capped_nearest([0.9 - eps, 0.07, 0.03 + eps], cap=0.9).values
            above = capped_nearest([0.9 + eps, 0.07 - eps, 0.03], cap=0.9).values
            assert np.abs(below - above).max() < 4 * eps

    def test_neutral_under_alternative_permutation(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            peak = random_profile(rng, 1, 4).peaks[0]
            perm = rng.permutation(4)
            direct = capped_nearest(peak[perm], cap=0.9).values
            routed = capped_nearest(peak, cap=0.9).values[perm]
            assert np.abs(direct - routed).max() < 1e-12

    def test_l1_strategyproof_for_single_agent(self):
        def rule(profile: Profile) -> Distribution:
            return capped_nearest(profile.peaks[0], cap=0.9)

        rng = np.random.default_rng(4)
        cfg = SearchConfig(grid_resolution=25)
        for _ in range(12):
            prof = random_profile(rng, 1, 3)
            report = audit_strategyproofness(rule, "l1", prof, cfg)
            assert report.passed, report.witness["best"]


class TestMeanBaselineContrast:
    def test_mean_is_manipulable_where_phantom_rules_are_not(self):
        prof = Profile([[0.5, 0.5], [0.0, 1.0]])
        report = audit_strategyproofness(
            mean_rule, "l1", prof, SearchConfig(grid_resolution=10)
        )
        assert report.verdict == "fail"
