"""Command-line interface: dispatch, exit codes, file round-trips, determinism."""

import json

import numpy as np
import pytest

from portionforge.cli import load_profile, main, save_profile
from portionforge.core import Profile


@pytest.fixture
def example_file(tmp_path):
    path = tmp_path / "example.json"
    path.write_text(json.dumps({
        "m": 3,
        "model": "leontief",
        "agents": [[0.8, 0.2, 0.0], [0.8, 0.0, 0.2]],
    }))
    return str(path)


@pytest.fixture
def m2_file(tmp_path):
    path = tmp_path / "pair.json"
    path.write_text(json.dumps({
        "m": 2,
        "model": "l1",
        "agents": [[0.75, 0.25], [0.25, 0.75]],
    }))
    return str(path)


def run(capsys, *argv) -> tuple[int, dict | None]:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else None)


class TestAggregate:
    def test_nash_on_the_example_file(self, capsys, example_file):
        code, payload = run(
            capsys, "aggregate", "--mechanism", "nash", "--profile", example_file
        )
        assert code == 0
        assert np.abs(np.array(payload["distribution"]) - [2/3, 1/6, 1/6]).max() < 1e-6
        assert np.allclose(payload["utilities"], [5/6, 5/6], atol=1e-6)

    def test_independent_markets_on_the_example_file(self, capsys, example_file):
        code, payload = run(
            capsys, "aggregate", "--mechanism", "independent-markets",
            "--profile", example_file,
        )
        assert code == 0
        assert np.abs(np.array(payload["distribution"]) - [0.6, 0.2, 0.2]).max() < 1e-9

    def test_uniform_phantom_needs_two_alternatives(self, capsys, example_file):
        code, _ = run(
            capsys, "aggregate", "--mechanism", "uniform-phantom",
            "--profile", example_file,
        )
        assert code == 3

    def test_uniform_phantom_on_m2(self, capsys, m2_file):
        code, payload = run(
            capsys, "aggregate", "--mechanism", "uniform-phantom", "--profile", m2_file
        )
        assert code == 0
        assert payload["distribution"] == [0.5, 0.5]

    def test_capped_nearest_needs_single_agent(self, capsys, example_file):
        code, _ = run(
            capsys, "aggregate", "--mechanism", "capped-nearest",
            "--profile", example_file,
        )
        assert code == 3

    def test_malformed_file_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"m": 3, "agents": [[0.5, 0.5]]}')
        code, _ = run(capsys, "aggregate", "--mechanism", "mean", "--profile", str(bad))
        assert code == 2

    def test_csv_export(self, capsys, m2_file, tmp_path):
        out = tmp_path / "dist.csv"
        code, _ = run(
            capsys, "aggregate", "--mechanism", "mean", "--profile", m2_file,
            "--out", str(out), "--format", "csv",
        )
        assert code == 0
        assert out.read_text().strip() == "0.5,0.5"


class TestAudit:
    def test_strategyproofness_failure_exits_1(self, capsys, example_file):
        code, payload = run(
            capsys, "audit", "--axiom", "strategyproofness",
            "--mechanism", "independent-markets", "--model", "leontief",
            "--profile", example_file,
        )
        assert code == 1
        assert payload["verdicts"] == ["fail"]
        assert payload["witnesses"][0]["best"]["gain"] > 0.02

    def test_cfs_of_nash_on_random_profiles(self, capsys):
        code, payload = run(
            capsys, "audit", "--axiom", "cfs", "--mechanism", "nash",
            "--random", "5", "3", "25", "--seed", "7",
        )
        assert code == 0
        assert set(payload["verdicts"]) == {"pass"}

    def test_range_respect_of_nash_fails_on_example(self, capsys, example_file):
        code, payload = run(
            capsys, "audit", "--axiom", "range-respect", "--mechanism", "nash",
            "--profile", example_file,
        )
        assert code == 1

    def test_proportionality_requires_random_spec(self, capsys):
        code, _ = run(
            capsys, "audit", "--axiom", "proportionality", "--mechanism", "mean"
        )
        assert code == 2

    def test_proportionality_of_uniform_phantom(self, capsys):
        code, payload = run(
            capsys, "audit", "--axiom", "proportionality",
            "--mechanism", "uniform-phantom", "--random", "6", "2", "1",
        )
        assert code == 0

    def test_reports_are_byte_identical_across_runs(self, capsys):
        args = (
            "audit", "--axiom", "strategyproofness", "--mechanism", "nash",
            "--model", "leontief", "--random", "3", "3", "5", "--seed", "11",
            "--resolution", "6",
        )
        code1 = main(list(args))
        text1 = capsys.readouterr().out
        code2 = main(list(args))
        text2 = capsys.readouterr().out
        assert code1 == code2
        assert text1 == text2


class TestVerifyImpossibility:
    def test_l1_chain_certifies(self, capsys):
        code, payload = run(
            capsys, "verify-impossibility", "--model", "l1", "--agents", "3"
        )
        assert code == 0
        assert payload["certified"] is True
        assert all(step["status"] == "certified" for step in payload["steps"])

    def test_linf_chain_certifies_for_seven_agents(self, capsys):
        code, payload = run(
            capsys, "verify-impossibility", "--model", "linf", "--agents", "7"
        )
        assert code == 0

    def test_two_agents_rejected(self, capsys):
        code, _ = run(
            capsys, "verify-impossibility", "--model", "l1", "--agents", "2"
        )
        assert code == 2

    def test_gauntlet_flag(self, capsys):
        code, payload = run(
            capsys, "verify-impossibility", "--model", "l1", "--agents", "3",
            "--mechanism", "utilitarian-l1",
        )
        assert code == 0
        assert payload["gauntlet"]["witness"]["first_axiom"] == "proportionality"


class TestOracle:
    def test_nash_oracle(self, capsys, example_file):
        code, payload = run(
            capsys, "oracle", "--objective", "nash", "--profile", example_file,
            "--resolution", "120",
        )
        assert code == 0
        assert np.abs(np.array(payload["argmax"]) - [2/3, 1/6, 1/6]).sum() < 0.05

    def test_utilitarian_oracle(self, capsys, m2_file):
        code, payload = run(
            capsys, "oracle", "--objective", "utilitarian", "--profile", m2_file,
            "--resolution", "100",
        )
        assert code == 0


class TestRoundTrip:
    def test_profile_files_round_trip_exactly(self, tmp_path):
        rng = np.random.default_rng(3)
        for k in range(20):
            prof = Profile(rng.dirichlet(np.ones(3), size=4))
            path = tmp_path / f"p{k}.json"
            save_profile(str(path), prof, "leontief")
            loaded, model = load_profile(str(path))
            assert model == "leontief"
            assert np.array_equal(loaded.peaks, prof.peaks)
