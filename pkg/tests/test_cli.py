import json
import subprocess
import sys

import pytest

from driftlab.cli import cli_main


def read_csv_lines(path):
    return path.read_text().splitlines()


class TestScaleCommand:
    def test_smoke_two_sizes(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code = cli_main(
            ["scale", "--preset", "onemax", "--n", "64,128", "--reps", "10", "--seed", "1",
             "--out", str(out)]
        )
        assert code == 0
        lines = read_csv_lines(out)
        assert len(lines) == 3  # header + one row per size
        assert lines[0].startswith("n,s,alpha,")
        assert "scale:" in capsys.readouterr().out

    def test_non_integer_alpha_n_is_config_error(self, capsys):
        code = cli_main(["scale", "--n", "7", "--alpha", "1/2", "--reps", "2"])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_flag_rejected_with_usage(self, capsys):
        code = cli_main(["scale", "--bogus", "1"])
        assert code == 1
        assert "usage" in capsys.readouterr().err

    def test_io_error_exit_code(self, tmp_path):
        missing_dir = tmp_path / "no" / "such" / "dir" / "r.csv"
        code = cli_main(
            ["scale", "--preset", "onemax", "--n", "16", "--reps", "2", "--out", str(missing_dir)]
        )
        assert code == 2

    def test_config_file_with_flag_override(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"preset": "onemax", "n": [16], "reps": 2, "seed": 5}))
        out_json = tmp_path / "bundle.json"
        code = cli_main(["scale", "--config", str(cfg_path), "--reps", "3", "--json", str(out_json)])
        assert code == 0
        doc = json.loads(out_json.read_text())
        assert doc["config"]["replicates"] == 3
        assert doc["config"]["seed"] == 5
        assert doc["rows"][0]["reps"] == 3

    def test_check_flag_fails_on_heavy_censoring(self, tmp_path):
        code = cli_main(
            ["scale", "--preset", "onemax", "--n", "32", "--reps", "4", "--budget", "3", "--check"]
        )
        assert code == 3


class TestDriftCommand:
    def test_exhaustive_passes(self, tmp_path, capsys):
        out_csv = tmp_path / "drift.csv"
        out_json = tmp_path / "drift.json"
        code = cli_main(
            ["drift", "--n", "8", "--s", "2", "--alpha", "1/2", "--exhaustive",
             "--out", str(out_csv), "--json", str(out_json), "--check"]
        )
        assert code == 0
        assert "pass" in capsys.readouterr().out
        doc = json.loads(out_json.read_text())
        assert set(doc) == {"min_ratio", "delta_ref", "epsilon", "pass"}
        assert doc["pass"] is True
        assert read_csv_lines(out_csv)[0] == "state_index,ones,phi,drift,ratio"

    def test_sampled_states(self, tmp_path):
        out_csv = tmp_path / "drift.csv"
        code = cli_main(
            ["drift", "--n", "16", "--s", "0", "--states", "20", "--seed", "2", "--out", str(out_csv)]
        )
        assert code == 0
        assert 2 <= len(read_csv_lines(out_csv)) <= 21 + 1

    def test_missing_size_is_config_error(self):
        assert cli_main(["drift"]) == 1

    def test_instance_file(self, tmp_path):
        import driftlab as dl

        path = tmp_path / "inst.json"
        dl.save_instance(dl.onemax(8), path)
        assert cli_main(["drift", "--instance", str(path), "--exhaustive", "--check"]) == 0


class TestEscapeCommand:
    def test_smoke(self, tmp_path):
        out = tmp_path / "escape.csv"
        code = cli_main(["escape", "--n", "6,8", "--reps", "3", "--seed", "2", "--out", str(out)])
        assert code == 0
        lines = read_csv_lines(out)
        assert lines[0] == "n,reps,mean_T,sd_T"
        assert len(lines) == 3


class TestTailCommand:
    def test_certified_smoke(self, tmp_path):
        out = tmp_path / "tail.csv"
        code = cli_main(
            ["tail", "--n", "8", "--preset", "onemax", "--r", "1,2,3", "--reps", "100",
             "--seed", "4", "--out", str(out), "--check"]
        )
        assert code == 0
        lines = read_csv_lines(out)
        assert lines[0] == "r,threshold,exceed_freq,bound"
        assert len(lines) == 4

    def test_absurd_delta_fails_check(self):
        code = cli_main(
            ["tail", "--n", "8", "--preset", "onemax", "--r", "1", "--reps", "50",
             "--delta", "0.9", "--check"]
        )
        assert code == 3


class TestChanceCommand:
    def test_smoke(self, tmp_path):
        out = tmp_path / "chance.csv"
        code = cli_main(
            ["chance", "--m", "4", "--alpha-c", "0.9", "--samples", "20000", "--reps", "2",
             "--probes", "1", "--seed", "3", "--out", str(out), "--check"]
        )
        assert code == 0
        lines = read_csv_lines(out)
        assert lines[0] == "probe,g_value,empirical_level,alpha_c"
        assert len(lines) >= 2

    def test_missing_m_is_config_error(self):
        assert cli_main(["chance"]) == 1

    def test_instance_file_supplies_item_count(self, tmp_path):
        import driftlab as dl

        path = tmp_path / "c.json"
        dl.save_chance_instance(dl.ChanceInstance([1.0, 3.0], [1.0, 1.0], 0.85), path)
        out = tmp_path / "rows.csv"
        code = cli_main(
            ["chance", "--instance", str(path), "--samples", "20000", "--reps", "2",
             "--probes", "0", "--seed", "2", "--out", str(out)]
        )
        assert code == 0
        assert "0.85" in read_csv_lines(out)[1]


class TestRunCommand:
    def test_trace_json(self, tmp_path):
        out = tmp_path / "trace.json"
        code = cli_main(
            ["run", "--preset", "onemax", "--n", "16", "--seed", "3", "--json", str(out)]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert set(doc) == {
            "seed", "spawn_key", "hitting_time", "budget_exhausted", "accepted_steps", "samples",
        }
        assert doc["hitting_time"] is not None

    def test_multiple_replicates_trace_list(self, tmp_path):
        out = tmp_path / "traces.json"
        code = cli_main(
            ["run", "--preset", "onemax", "--n", "16", "--reps", "3", "--seed", "3",
             "--json", str(out)]
        )
        assert code == 0
        assert len(json.loads(out.read_text())) == 3


class TestTopLevel:
    def test_help_exits_zero(self):
        assert cli_main(["--help"]) == 0

    def test_version_exits_zero(self):
        assert cli_main(["--version"]) == 0

    def test_no_command_is_error(self):
        assert cli_main([]) == 1

    def test_console_entry_point(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "driftlab.cli", "scale", "--preset", "onemax", "--n", "16",
             "--reps", "2", "--seed", "1"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "scale:" in result.stdout


@pytest.mark.parametrize("argv", [
    ["scale", "--preset", "onemax", "--n", "16", "--reps", "2", "--seed", "8"],
    ["escape", "--n", "6", "--reps", "2", "--seed", "8"],
])
def test_repeat_invocations_reproduce_output(tmp_path, argv):
    # same config + seed => byte-identical reports (paths live in separate dirs
    # so the config echo matches byte for byte as well)
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        d.mkdir()
        code = cli_main(argv + ["--json", str(d / "r.json"), "--out", str(d / "r.csv")])
        assert code == 0
    assert (dirs[0] / "r.csv").read_bytes() == (dirs[1] / "r.csv").read_bytes()
    docs = [json.loads((d / "r.json").read_text()) for d in dirs]
    for doc in docs:
        doc["config"].pop("out_json")
        doc["config"].pop("out_csv")
    assert docs[0] == docs[1]
