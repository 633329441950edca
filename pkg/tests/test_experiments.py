import json
import math

import numpy as np
import pytest

import driftlab as dl
from driftlab.experiments import ExperimentConfig


def make_cfg(**overrides):
    base = dict(kind="scale", n_values=(16, 32), preset="onemax", replicates=5, seed=1)
    base.update(overrides)
    return ExperimentConfig(**base)


class TestExperimentConfig:
    def test_round_trip(self):
        cfg = make_cfg(alpha="1/2", r_values=(1, 2, 3), transforms=("square", "square_root"))
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_validation(self):
        with pytest.raises(ValueError):
            make_cfg(kind="nope")
        with pytest.raises(ValueError):
            make_cfg(n_values=())
        with pytest.raises(ValueError):
            make_cfg(replicates=0)
        with pytest.raises(ValueError):
            make_cfg(preset="bogus")
        with pytest.raises(ValueError):
            make_cfg(confidence=1.5)


class TestFitting:
    def test_exact_nlogn_recovery(self):
        rows = [(n, 5.0 * n * math.log(n)) for n in (50, 100, 200, 400)]
        fit = dl.fit_nlogn(rows)
        assert fit.nlogn_coefficient == pytest.approx(5.0, rel=1e-12)
        assert fit.nlogn_rms_residual == pytest.approx(0.0, abs=1e-9)

    def test_exact_power_recovery(self):
        rows = [(n, float(n) ** 2) for n in (10, 20, 40, 80)]
        fit = dl.fit_nlogn(rows)
        assert fit.power_exponent == pytest.approx(2.0, abs=1e-6)
        assert fit.power_coefficient == pytest.approx(1.0, rel=1e-6)

    def test_refit_is_deterministic(self):
        rows = [(n, 3.3 * n * math.log(n) + (n % 7)) for n in (50, 100, 200, 400)]
        a = dl.fit_nlogn(rows)
        b = dl.fit_nlogn(rows)
        assert a == b

    def test_needs_three_sizes(self):
        with pytest.raises(ValueError):
            dl.fit_nlogn([(10, 100.0), (20, 250.0)])


class TestScalingStudy:
    def test_onemax_smoke(self):
        bundle = dl.scaling_study(make_cfg())
        assert [r.n for r in bundle.rows] == [16, 32]
        assert all(r.censored == 0 for r in bundle.rows)
        assert all(r.mean_T > 0 for r in bundle.rows)
        for row in bundle.rows:
            assert row.ratio_nlogn == pytest.approx(row.mean_T / (row.n * math.log(row.n)))
        assert bundle.checks["censoring_at_most_1pct"]

    def test_config_echo_reparses(self):
        cfg = make_cfg()
        bundle = dl.scaling_study(cfg)
        assert ExperimentConfig.from_dict(bundle.config) == cfg

    def test_byte_identical_outputs(self, tmp_path):
        cfg = make_cfg()
        for tag in ("a", "b"):
            bundle = dl.scaling_study(cfg)
            bundle.write_csv(tmp_path / f"{tag}.csv")
            bundle.write_json(tmp_path / f"{tag}.json")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_workers_do_not_change_results(self, tmp_path):
        serial = dl.scaling_study(make_cfg(replicates=4))
        parallel = dl.scaling_study(make_cfg(replicates=4, workers=2))
        a, b = tmp_path / "serial.json", tmp_path / "parallel.json"
        serial.write_json(a)
        parallel.write_json(b)
        doc_a, doc_b = json.loads(a.read_text()), json.loads(b.read_text())
        doc_a["config"].pop("workers")
        doc_b["config"].pop("workers")
        assert doc_a == doc_b

    def test_budget_censoring_is_reported_not_mixed(self):
        bundle = dl.scaling_study(make_cfg(n_values=(32,), replicates=6, budget=3))
        row = bundle.rows[0]
        assert row.censored == 6
        assert math.isnan(row.mean_T)
        assert not bundle.checks["censoring_at_most_1pct"]

    def test_generated_instances_path(self):
        cfg = make_cfg(preset=None, n_values=(12,), s=2, replicates=3, weight_high=9)
        bundle = dl.scaling_study(cfg)
        assert bundle.rows[0].s == 2

    def test_fresh_instances_per_replicate(self):
        cfg = make_cfg(preset="separable", n_values=(12,), replicates=4, fresh_instances=True)
        bundle = dl.scaling_study(cfg)
        assert bundle.rows[0].censored == 0

    def test_kind_mismatch(self):
        with pytest.raises(ValueError):
            dl.scaling_study(make_cfg(kind="escape"))

    def test_csv_schema(self, tmp_path):
        bundle = dl.scaling_study(make_cfg())
        path = tmp_path / "rows.csv"
        bundle.write_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "n,s,alpha,reps,censored,mean_T,sd_T,median_T,ratio_nlogn"


class TestEscapeStudy:
    def test_planted_point_is_strict_local_optimum(self):
        inst = dl.MultimodalInstance(4)
        start = inst.local_optimum(1)
        f0 = inst.value(start)
        for i in range(4):
            neighbor = start.copy()
            neighbor[i] ^= 1
            assert inst.value(neighbor) > f0

    def test_smoke(self):
        cfg = ExperimentConfig(kind="escape", n_values=(6, 8), replicates=5, seed=2)
        bundle = dl.escape_study(cfg)
        assert all(r.censored == 0 for r in bundle.rows)
        assert all(r.mean_T > 0 for r in bundle.rows)

    def test_csv_schema(self, tmp_path):
        cfg = ExperimentConfig(kind="escape", n_values=(6,), replicates=2, seed=2)
        bundle = dl.escape_study(cfg)
        path = tmp_path / "rows.csv"
        bundle.write_csv(path)
        assert path.read_text().splitlines()[0] == "n,reps,mean_T,sd_T"


class TestTailStudy:
    def test_r_zero_bound_is_one_and_never_violated(self):
        cfg = ExperimentConfig(
            kind="tail", n_values=(8,), preset="onemax", replicates=100, seed=3, r_values=(0.0, 1.0)
        )
        bundle = dl.tail_study(cfg)
        r0 = bundle.rows[0]
        assert r0.bound == 1.0 and r0.exceed_freq <= 1.0 and not r0.violation
        assert bundle.checks["no_tail_violation"]

    def test_halved_delta_doubles_thresholds(self):
        base = ExperimentConfig(
            kind="tail", n_values=(8,), preset="onemax", replicates=50, seed=3, r_values=(1.0, 2.0)
        )
        certified = dl.tail_study(base)
        delta = certified.extras["delta"]
        halved = dl.tail_study(
            ExperimentConfig(
                kind="tail", n_values=(8,), preset="onemax", replicates=50, seed=3,
                r_values=(1.0, 2.0), delta=delta / 2,
            )
        )
        for a, b in zip(certified.rows, halved.rows):
            assert b.threshold == pytest.approx(2 * a.threshold, rel=1e-12)
            assert b.exceed_freq <= a.exceed_freq

    def test_refuses_uncertifiable_instance(self):
        cfg = ExperimentConfig(kind="tail", n_values=(64,), preset="onemax", replicates=10, seed=1)
        with pytest.raises(ValueError):
            dl.tail_study(cfg)

    def test_csv_schema(self, tmp_path):
        cfg = ExperimentConfig(
            kind="tail", n_values=(6,), preset="onemax", replicates=20, seed=5, r_values=(1.0,)
        )
        bundle = dl.tail_study(cfg)
        path = tmp_path / "rows.csv"
        bundle.write_csv(path)
        assert path.read_text().splitlines()[0] == "r,threshold,exceed_freq,bound"


class TestChanceDemo:
    def test_smoke_and_levels(self):
        cfg = ExperimentConfig(
            kind="chance", n_values=(6,), replicates=3, seed=4,
            confidence=0.9, level_samples=50_000, probes=2,
        )
        bundle = dl.chance_demo(cfg)
        se = math.sqrt(0.9 * 0.1 / 50_000)
        assert bundle.rows, "expected at least the all-ones probe"
        for row in bundle.rows:
            assert abs(row.empirical_level - 0.9) <= 4 * se
        assert bundle.checks["levels_within_4se"]

    def test_median_level_minimizes_to_zero_and_skips_probe(self):
        cfg = ExperimentConfig(
            kind="chance", n_values=(4,), replicates=2, seed=4,
            confidence=0.5, level_samples=20_000, probes=1,
        )
        bundle = dl.chance_demo(cfg)
        assert bundle.extras["best_fitness"] == 0.0
        assert any("zero variance" in note for note in bundle.notes)

    def test_ramp_instance_levels_at_full_samples(self):
        # mu_i = i, sigma_i = 1, level 0.9: every probe within 0.003 at 1e6 draws
        cfg = ExperimentConfig(
            kind="chance", n_values=(8,), replicates=2, seed=12,
            confidence=0.9, level_samples=10**6, probes=2,
        )
        bundle = dl.chance_demo(cfg)
        assert bundle.rows
        for row in bundle.rows:
            assert abs(row.empirical_level - 0.9) <= 0.003

    def test_chance_instance_file(self, tmp_path):
        c = dl.ChanceInstance([2.0, 4.0, 1.0], [1.0, 0.5, 1.5], 0.8)
        path = tmp_path / "c.json"
        dl.save_chance_instance(c, path)
        cfg = ExperimentConfig(
            kind="chance", n_values=(3,), replicates=2, seed=13,
            level_samples=20_000, probes=1, instance_file=str(path),
        )
        bundle = dl.chance_demo(cfg)
        assert all(row.alpha_c == 0.8 for row in bundle.rows)

    def test_all_ones_probe_value(self):
        m = 5
        cfg = ExperimentConfig(
            kind="chance", n_values=(m,), replicates=2, seed=6,
            confidence=0.9, level_samples=20_000, probes=0,
        )
        bundle = dl.chance_demo(cfg)
        row = next(r for r in bundle.rows if r.probe == "1" * m)
        mu_sum = sum(range(1, m + 1))
        expected = mu_sum + dl.normal_quantile(0.9) * math.sqrt(m)
        assert row.g_value == pytest.approx(expected, rel=1e-12)

    def test_csv_schema(self, tmp_path):
        cfg = ExperimentConfig(
            kind="chance", n_values=(4,), replicates=2, seed=4,
            confidence=0.8, level_samples=10_000, probes=0,
        )
        bundle = dl.chance_demo(cfg)
        path = tmp_path / "rows.csv"
        bundle.write_csv(path)
        assert path.read_text().splitlines()[0] == "probe,g_value,empirical_level,alpha_c"


class TestRunStudy:
    def test_traces_and_rows(self):
        cfg = ExperimentConfig(kind="run", n_values=(16,), preset="onemax", replicates=3, seed=9)
        bundle, traces = dl.run_study(cfg)
        assert len(traces) == 3 and len(bundle.rows) == 3
        for row, trace in zip(bundle.rows, traces):
            assert row.hitting_time == trace.hitting_time
        assert bundle.checks["all_runs_reached_optimum"]

    def test_instance_file_round_trip(self, tmp_path):
        inst = dl.onemax(8)
        path = tmp_path / "inst.json"
        dl.save_instance(inst, path)
        cfg = ExperimentConfig(
            kind="run", n_values=(8,), instance_file=str(path), replicates=2, seed=9
        )
        bundle, traces = dl.run_study(cfg)
        assert all(t.hitting_time is not None for t in traces)
