"""Tests for the hetcell command-line entry point (exit codes, stdout / stderr split)."""

import io
import json
import re

import pandas as pd
import pytest

from hetcell.cli import build_parser, main

TRACE_LINE = re.compile(r"^(\d+) (-?\d+) (\S+)$")


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestParser:
    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["sweep", "s.json", "--axis", "cw_min", "--values", "15,31"])
        assert args.command == "sweep" and args.jobs == 1 and args.format == "csv"

    def test_unknown_axis_is_usage_error(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["sweep", "s.json", "--axis", "slot_us", "--values", "9"])

    def test_no_command_prints_help(self, capsys):
        code, out, err = run_cli(capsys)
        assert code == 0 and out == ""
        assert "usage" in err


# ---- validate ----


class TestValidate:
    def test_valid_scenario(self, capsys, scenario_file):
        code, out, err = run_cli(capsys, "validate", str(scenario_file({"clients": 3})))
        assert code == 0
        assert "OK (3 clients, mode standard)" in err
        assert len(json.loads(out)["clients"]) == 3

    def test_errors_go_to_stderr(self, capsys, scenario_file):
        path = scenario_file({"mac": {"cw_min": 14}, "duration_s": 0})
        code, out, err = run_cli(capsys, "validate", str(path))
        assert code == 1 and out == ""
        assert "[ERROR] [FORMAT] mac.cw_min: cw_min must be 2^k − 1 (got 14)" in err
        assert "[ERROR] [RANGE] duration_s: must be > 0 (got 0)" in err

    def test_missing_file(self, capsys, tmp_path):
        code, out, err = run_cli(capsys, "validate", str(tmp_path / "nope.json"))
        assert code == 1
        assert "file not found" in err

    def test_invalid_json(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{", encoding="utf-8")
        code, _, err = run_cli(capsys, "validate", str(path))
        assert code == 1
        assert "invalid JSON" in err

    def test_single_key(self, capsys, scenario_file):
        path = str(scenario_file({"mac": {"cw_min": 31}}))
        code, out, _ = run_cli(capsys, "validate", path, "--key", "mac.cw_min")
        assert code == 0 and json.loads(out) == 31
        code, out, _ = run_cli(capsys, "validate", path, "-k", "tunnel")
        assert json.loads(out)["path"] == "via_core"

    def test_unknown_key(self, capsys, scenario_file):
        code, out, err = run_cli(capsys, "validate", str(scenario_file({})), "--key", "mac.cw_mid")
        assert code == 1 and out == ""
        assert "mac.cw_mid: not a scenario key" in err


# ---- oracle / coverage ----


class TestOracleCommand:
    def test_csv_table(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "--n-range", "1,5")
        assert code == 0
        df = pd.read_csv(io.StringIO(out))
        assert list(df["n"]) == [1, 5]
        assert df.iloc[0]["s_mbps"] == pytest.approx(12000 / 393.5, rel=1e-5)

    def test_json_output(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "--n-range", "1..3", "--cw-min", "31", "-f", "json")
        assert code == 0
        assert [row["n"] for row in json.loads(out)] == [1, 2, 3]

    def test_bad_window(self, capsys):
        code, out, err = run_cli(capsys, "oracle", "--cw-min", "14")
        assert code == 1 and out == ""
        assert "cw_min must be 2^k - 1" in err

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "oracle.csv"
        code, out, err = run_cli(capsys, "oracle", "--n-range", "2", "-o", str(target))
        assert code == 0 and out == ""
        assert f"wrote {target}" in err
        assert pd.read_csv(target)["n"].tolist() == [2]


class TestCoverageCommand:
    def test_default_budgets(self, capsys):
        code, out, _ = run_cli(capsys, "coverage")
        assert code == 0
        df = pd.read_csv(io.StringIO(out))
        ratio = df[df["row"] == "ratio"].iloc[0]
        assert ratio["range_ratio"] == pytest.approx(3.1623, abs=1e-4)

    def test_invalid_budgets(self, capsys, scenario_file):
        code, _, err = run_cli(capsys, "coverage", str(scenario_file({"budgets": []}, "b.json")))
        assert code == 1
        assert "at least one budget" in err


# ---- run / sweep ----


@pytest.mark.slow
class TestRunCommand:
    def test_run_csv(self, capsys, scenario_file, oracle_like):
        code, out, _ = run_cli(capsys, "run", str(scenario_file(oracle_like)), "--duration", "0.2", "--seed", "5")
        assert code == 0
        df = pd.read_csv(io.StringIO(out))
        assert len(df) == 1
        assert df.iloc[0]["seed"] == 5 and df.iloc[0]["duration_us"] == 200_000

    def test_run_is_reproducible(self, capsys, scenario_file, small_cell):
        path = str(scenario_file(small_cell))
        _, first, _ = run_cli(capsys, "run", path, "--duration", "0.1")
        _, second, _ = run_cli(capsys, "run", path, "--duration", "0.1")
        assert first == second

    def test_trace_file(self, capsys, scenario_file, oracle_like, tmp_path):
        trace = tmp_path / "trace.csv"
        code, _, _ = run_cli(capsys, "run", str(scenario_file(oracle_like)), "--duration", "0.05",
                             "--trace-file", str(trace))
        assert code == 0
        df = pd.read_csv(trace)
        assert list(df.columns) == ["time_us", "station", "event"]
        assert df["time_us"].is_monotonic_increasing

    def test_trace_lines_on_stderr(self, capsys, scenario_file, oracle_like):
        code, out, err = run_cli(capsys, "run", str(scenario_file(oracle_like)), "--duration", "0.01", "--trace")
        assert code == 0
        lines = [m for m in map(TRACE_LINE.match, err.splitlines()) if m]
        assert len(lines) > 10
        assert {m.group(3) for m in lines} >= {"access"}
        times = [int(m.group(1)) for m in lines]
        assert times == sorted(times) and times[-1] <= 10_000
        assert len(pd.read_csv(io.StringIO(out))) == 1

    def test_no_trace_lines_without_flag(self, capsys, scenario_file, oracle_like):
        _, _, err = run_cli(capsys, "run", str(scenario_file(oracle_like)), "--duration", "0.01")
        assert not [line for line in err.splitlines() if TRACE_LINE.match(line)]

    def test_sweep_table(self, capsys, scenario_file, oracle_like):
        oracle_like["duration_s"] = 0.1
        code, out, _ = run_cli(capsys, "sweep", str(scenario_file(oracle_like)),
                               "--axis", "cw_min", "--values", "15,31")
        assert code == 0
        df = pd.read_csv(io.StringIO(out))
        assert list(df["value"]) == [15, 31]

    def test_sweep_bad_axis_value(self, capsys, scenario_file, oracle_like):
        code, _, err = run_cli(capsys, "sweep", str(scenario_file(oracle_like)),
                               "--axis", "ul_fraction", "--values", "0.5")
        assert code == 1
        assert "TDD" in err
