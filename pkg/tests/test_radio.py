"""Tests for propagation, SINR capture, airtime and link-budget range."""

import math

import pytest

from hetcell.radio import (
    LinkBudget, PathLossModel, PhyParams, Position, area_ratio, capture_decision,
    frame_airtime_us, max_range_m, path_loss_db, range_ratio, sinr_db,
)

MODEL = PathLossModel()


# ---- path loss ----


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss_db(MODEL, 1.0) == pytest.approx(40.0)

    def test_ten_metres_exponent_four(self):
        assert path_loss_db(MODEL, 10.0) == pytest.approx(80.0)

    def test_below_reference_clamps(self):
        assert path_loss_db(MODEL, 0.0) == pytest.approx(40.0)
        assert path_loss_db(MODEL, 0.2) == pytest.approx(40.0)

    def test_wall_adds_penetration(self):
        model = PathLossModel(wall_penetration_db=12.0)
        assert path_loss_db(model, 10.0, crosses_wall=True) == pytest.approx(92.0)
        assert path_loss_db(model, 10.0) == pytest.approx(80.0)

    def test_bad_model_rejected(self):
        with pytest.raises(ValueError):
            PathLossModel(exponent=0)

    def test_position_distance(self):
        assert Position(0, 0).distance_to(Position(3, 4)) == pytest.approx(5.0)

    def test_position_must_be_finite(self):
        with pytest.raises(ValueError):
            Position(math.inf, 0)


# ---- SINR and capture ----


class TestCapture:
    def test_no_interference_is_snr(self):
        assert sinr_db(-60.0, [], -95.0) == pytest.approx(35.0)

    def test_equal_powers_collide(self):
        assert capture_decision([-60.0, -60.0], -95.0, 10.0, -76.0) is None

    def test_strong_frame_captured(self):
        assert capture_decision([-70.0, -50.0], -95.0, 10.0, -76.0) == 1

    def test_margin_just_below_threshold(self):
        assert capture_decision([-50.0, -59.5], -95.0, 10.0, -76.0) is None

    def test_below_sensitivity_lost(self):
        assert capture_decision([-80.0], -95.0, 10.0, -76.0) is None

    def test_single_frame_decoded(self):
        assert capture_decision([-60.0], -95.0, 10.0, -76.0) == 0

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError):
            capture_decision([], -95.0, 10.0, -76.0)


# ---- airtime ----


class TestAirtime:
    def test_data_frame_1500_bytes(self):
        assert PhyParams().data_airtime_us(1500) == 248

    def test_mac_ack_at_control_rate(self):
        assert PhyParams().control_airtime_us() == 28

    def test_zero_payload_is_preamble_plus_one_symbol(self):
        assert frame_airtime_us(0, 54, PhyParams()) == 24

    def test_lower_rate_is_longer(self):
        phy = PhyParams()
        assert frame_airtime_us(1528, 6, phy) > frame_airtime_us(1528, 54, phy)

    def test_unsupported_rate(self):
        with pytest.raises(ValueError):
            PhyParams(data_rate_mbps=11)


# ---- coverage ----


class TestRange:
    def test_client_and_ap_ranges(self):
        assert max_range_m(LinkBudget(16.0), MODEL) == pytest.approx(19.953, abs=1e-3)
        assert max_range_m(LinkBudget(36.0), MODEL) == pytest.approx(63.096, abs=1e-3)

    def test_ratio_for_twenty_db(self):
        assert range_ratio(4000.0, 40.0, 4.0) == pytest.approx(math.sqrt(10.0))
        assert area_ratio(4000.0, 40.0, 4.0) == pytest.approx(10.0)

    def test_free_space_exponent_two(self):
        assert range_ratio(4000.0, 40.0, 2.0) == pytest.approx(10.0)

    def test_no_margin_zero_range(self):
        assert max_range_m(LinkBudget(-40.0), MODEL) == 0.0

    def test_sensitivity_must_exceed_noise(self):
        with pytest.raises(ValueError):
            LinkBudget(16.0, sensitivity_dbm=-96.0, noise_floor_dbm=-95.0)
