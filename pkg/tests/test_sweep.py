"""Tests for sweep axis parsing, per-point seeding and table order."""

import pytest

from hetcell.metrics import ReportTable, emit
from hetcell.scenario import ScenarioError, scenario_from_dict
from hetcell.simulation import run
from hetcell.sweep import SweepError, apply_axis, parse_axis_values, sweep, sweep_configs


# ---- axis values ----


class TestParseAxisValues:
    def test_integer_ranges(self):
        assert parse_axis_values("n_clients", "1..3, 5,10") == [1, 2, 3, 5, 10]

    def test_unlimited_retries(self):
        assert parse_axis_values("retry_limit", "0,7,none,inf") == [0, 7, None, None]

    def test_modes_and_fractions(self):
        assert parse_axis_values("mode", "standard,hybrid") == ["standard", "hybrid"]
        assert parse_axis_values("ul_fraction", "0.25,0.5") == [0.25, 0.5]

    def test_bad_token(self):
        with pytest.raises(SweepError, match="bad value 'x'"):
            parse_axis_values("cw_min", "15,x")

    def test_unknown_axis(self):
        with pytest.raises(SweepError, match="unknown sweep axis"):
            parse_axis_values("slot_us", "9")


class TestApplyAxis:
    def test_nested_keys(self):
        assert apply_axis({}, "cw_min", 31) == {"mac": {"cw_min": 31}}
        assert apply_axis({"lte": {"duplex": "TDD"}}, "ul_fraction", 0.3) == {"lte": {"duplex": "TDD",
                                                                                     "ul_fraction": 0.3}}

    def test_base_not_modified(self):
        base = {"mac": {"cw_min": 15}}
        apply_axis(base, "cw_min", 63)
        assert base == {"mac": {"cw_min": 15}}

    def test_explicit_clients_reject_count_axis(self):
        with pytest.raises(SweepError):
            apply_axis({"clients": [{"x": 1, "y": 0}]}, "n_clients", 4)

    def test_explicit_clients_follow_mode(self):
        out = apply_axis({"clients": [{"x": 1, "y": 0, "mode": "standard"}]}, "mode", "tight")
        assert out["clients"] == [{"x": 1, "y": 0}]
        assert out["mode"] == "tight"


# ---- configs ----


class TestSweepConfigs:
    def test_seeds_follow_position(self):
        points = sweep_configs({"seed": 40}, "cw_min", [15, 31, 63])
        assert [cfg.seed for _, cfg in points] == [40, 41, 42]
        assert [cfg.mac.cw_min for _, cfg in points] == [15, 31, 63]

    def test_ul_fraction_needs_tdd(self):
        with pytest.raises(SweepError, match="TDD"):
            sweep_configs({}, "ul_fraction", [0.5])
        points = sweep_configs({"lte": {"duplex": "TDD"}}, "ul_fraction", [0.2, 0.8])
        assert [cfg.lte.ul_fraction for _, cfg in points] == [0.2, 0.8]

    def test_bad_points_reported_together(self):
        with pytest.raises(ScenarioError) as exc:
            sweep_configs({}, "cw_min", [14, 15, 30])
        errors = exc.value.errors
        assert len(errors) == 2
        assert errors[0].startswith("cw_min=14: [FORMAT] mac.cw_min")
        assert errors[1].startswith("cw_min=30: [FORMAT] mac.cw_min")


# ---- running ----


@pytest.mark.slow
class TestSweepRun:
    def test_rows_in_value_order(self, oracle_like):
        oracle_like["duration_s"] = 0.2
        table = sweep(oracle_like, "n_clients", [2, 1])
        assert isinstance(table, ReportTable)
        assert [value for value, _ in table.rows] == [2, 1]
        assert [r.n_clients for _, r in table.rows] == [2, 1]
        assert [r.seed for _, r in table.rows] == [3, 4]
        assert all(r.goodput_mbps("uplink") > 0 for _, r in table.rows)

    @pytest.mark.parametrize("jobs", [1, 2])
    def test_rows_match_standalone_runs(self, oracle_like, jobs):
        oracle_like["duration_s"] = 0.2
        table = sweep(oracle_like, "cw_min", [15, 31], jobs=jobs)
        for i, (cw, report) in enumerate(table.rows):
            alone = dict(oracle_like, seed=oracle_like["seed"] + i, mac={**oracle_like["mac"], "cw_min": cw})
            assert emit(report, "json") == emit(run(scenario_from_dict(alone)), "json")

    def test_empty_values(self, oracle_like):
        assert sweep(oracle_like, "cw_min", []).rows == []
