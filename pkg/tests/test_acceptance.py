"""End-to-end acceptance gate.

One test per numbered criterion, with the tolerance and the runtime budget
pinned in the assertion itself.  Criterion 7 is split so the selection-error
bounds and the power bound report separately; the power bound is not
attainable at this scale with the scaled per-group amplitude (observed near
0.64 for the k-rule and 0.53 for the exceedance rule against a 0.9 floor)
and is expected to fail until the amplitude convention changes.
"""
import json
import time
from importlib import resources

import numpy as np
import pytest
from click.testing import CliRunner

from stepslope.cli import main
from stepslope.groups import GroupPartition, solve_group_slope
from stepslope.schedules import bh_schedule, kfwer_schedule
from stepslope.simlab import ExperimentConfig, run_experiment
from stepslope.solver import DesignMatrix, solve_slope
from stepslope.sorted_l1 import prox_sorted_l1
from stepslope.stepdown import fdp_thresholds, kfwer_thresholds, stepdown_reject

from oracles import normal_quantile_bisect, prox_enum, stepdown_bruteforce


def test_criterion_01_prox_matches_bruteforce_oracle():
    rng = np.random.default_rng(101)
    start = time.monotonic()
    for trial in range(500):
        m = int(rng.integers(1, 7))
        scale = 10.0 ** rng.integers(-1, 3)
        v = scale * rng.normal(size=m)
        if trial % 5 == 0:
            # exercise ties and exact zeros, where pooling decisions bind
            v = np.round(v)
        lam = np.sort(np.abs(rng.normal(size=m)))[::-1] * scale
        if trial % 7 == 0:
            lam[m // 2:] = lam[m // 2] if m > 1 else lam[0]
        got = prox_sorted_l1(v, lam)
        want = prox_enum(v, lam)
        assert np.max(np.abs(got - want)) <= 1e-6 * max(1.0, scale)
    assert time.monotonic() - start < 30.0


def test_criterion_02_stepdown_matches_exhaustive_search():
    rng = np.random.default_rng(202)
    start = time.monotonic()
    for trial in range(10_000):
        m = int(rng.integers(1, 13))
        p = rng.uniform(size=m)
        if trial % 3 == 0:
            p = np.round(p, 1)
        style = trial % 3
        if style == 0:
            thr = kfwer_thresholds(m, int(rng.integers(1, m + 1)), 0.1)
        elif style == 1:
            thr = fdp_thresholds(m, 0.1, float(rng.uniform(0.05, 0.5)))
        else:
            thr = np.sort(rng.uniform(size=m))
        assert stepdown_reject(p, thr) == stepdown_bruteforce(p, thr)
    assert time.monotonic() - start < 10.0


def test_criterion_03_schedule_spot_values():
    bh = bh_schedule(1000, 0.1)
    assert abs(bh.values[0] - 3.890592) <= 1e-5
    assert bh.values[0] == pytest.approx(
        normal_quantile_bisect(1.0 - 0.1 / 2000.0), abs=1e-10
    )
    kf = kfwer_schedule(1000, 5, 0.1)
    assert abs(kf.values[0] - 3.480756) <= 1e-5
    assert kf.values[0] == pytest.approx(
        normal_quantile_bisect(1.0 - 5 * 0.1 / 2000.0), abs=1e-10
    )


def test_criterion_04_orthogonal_kfwer_control():
    config = ExperimentConfig(
        design="orthogonal-identity", method="k-slope", n=500, m=500, t=25,
        k=5, alpha=0.1, replications=400, seed=4201,
    )
    start = time.monotonic()
    report = run_experiment(config)
    elapsed = time.monotonic() - start
    kfwer = report.aggregates["kfwer"][0]
    slack = 0.1 + 3.0 * np.sqrt(0.1 * 0.9 / 400.0)
    assert kfwer <= slack
    assert kfwer <= 0.05
    assert elapsed < 300.0


def test_criterion_05_orthogonal_fdp_control_and_power():
    config = ExperimentConfig(
        design="orthogonal-identity", method="f-slope", n=500, m=500, t=25,
        alpha=0.1, gamma=0.1, replications=400, seed=4202,
    )
    start = time.monotonic()
    report = run_experiment(config)
    elapsed = time.monotonic() - start
    assert report.aggregates["prob_fdp"][0] <= 0.05
    assert report.aggregates["fdr"][0] <= 0.02
    assert report.aggregates["power"][0] >= 0.98
    assert elapsed < 300.0


def test_criterion_06_singleton_groups_reduce_to_feature_fit():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        m = 20
        if seed % 2 == 0:
            X = np.eye(m)
        else:
            X = rng.normal(size=(30, m))
            X /= np.sqrt((X * X).sum(axis=0))
        beta = np.zeros(m)
        beta[rng.choice(m, size=4, replace=False)] = 3.0
        y = X @ beta + rng.standard_normal(X.shape[0])
        lam = bh_schedule(m, 0.25).values
        design = DesignMatrix(X)
        flat = solve_slope(design, y, lam, tol=1e-10)
        part = GroupPartition.from_sizes([1] * m, np.ones(m))
        grouped = solve_group_slope(design, y, part, lam, tol=1e-10)
        assert set(np.flatnonzero(grouped.beta)) == flat.support, seed
        assert np.max(np.abs(grouped.beta - flat.beta)) <= 1e-8, seed


@pytest.fixture(scope="module")
def group_desk_reports():
    base = dict(design="group-orthogonal", n=1000, m=1000, t=20, num_groups=200,
                group_sizes=(5,), replications=200, seed=4207)
    start = time.monotonic()
    gk = run_experiment(ExperimentConfig(method="gk-slope", k=5, alpha=0.1, **base))
    gf = run_experiment(ExperimentConfig(method="gf-slope", alpha=0.1, gamma=0.1, **base))
    return gk, gf, time.monotonic() - start


def test_criterion_07_group_error_control(group_desk_reports):
    gk, gf, elapsed = group_desk_reports
    assert gk.aggregates["kfwer"][0] <= 0.15
    assert gf.aggregates["prob_fdp"][0] <= 0.1
    assert elapsed < 600.0


def test_criterion_07_group_power(group_desk_reports):
    # the 0.9 floor is out of reach at this amplitude; kept as stated
    gk, gf, _ = group_desk_reports
    assert gk.aggregates["power"][0] >= 0.9
    assert gf.aggregates["power"][0] >= 0.9


def test_criterion_08_gaussian_corrected_fdp_control():
    config = ExperimentConfig(
        design="gaussian", method="f-slope", n=1000, m=500, t=20,
        signal="moderate", alpha=0.1, gamma=0.1, replications=200, seed=4208,
    )
    start = time.monotonic()
    report = run_experiment(config)
    elapsed = time.monotonic() - start
    assert report.extras["schedule"]["rule"] == "FDP-Gaussian"
    assert report.aggregates["fdr"][0] <= 0.15
    assert report.aggregates["prob_fdp"][0] <= 0.1
    assert elapsed < 600.0


@pytest.mark.slow
def test_criterion_09_full_scale_orthogonal_table():
    doc = json.loads(
        resources.files("stepslope").joinpath("presets/table2.json").read_text()
    )
    picked = [d for d in doc["experiments"] if d["t"] in (50, 100)]
    assert len(picked) == 4
    start = time.monotonic()
    for d in picked:
        config = ExperimentConfig.from_dict(d)
        assert config.n == config.m == 1000
        assert config.replications == 100
        report = run_experiment(config)
        label = f"{config.method} t={config.t}"
        assert report.aggregates["fdr"][0] <= 0.007 + 0.01, label
        assert report.aggregates["power"][0] >= 0.99, label
    assert time.monotonic() - start < 1800.0


def test_criterion_10_preset_reports_are_byte_identical(tmp_path):
    runner = CliRunner()
    outputs = []
    for root in ("first", "second"):
        res = runner.invoke(
            main,
            ["simulate", "--preset", "table2", "--reps", "2", "--threads", "1",
             "--out", str(tmp_path / root)],
            catch_exceptions=False,
        )
        assert res.exit_code == 0
        run_id = res.output.strip().split()[1].rstrip(":")
        run_dir = tmp_path / root / run_id
        outputs.append(
            (
                (run_dir / "report.csv").read_bytes(),
                (run_dir / "details.json").read_bytes(),
            )
        )
    assert outputs[0] == outputs[1]
