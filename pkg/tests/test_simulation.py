"""
End-to-end runs of short scenarios: determinism, time accounting, the
per-mode routing of Wi-Fi airtime, association outcomes, interferers,
downlink-only windows and tunnel bookkeeping.
"""

import pytest

from hetcell.enums import Association, Interface, Mode
from hetcell.metrics import emit
from hetcell.scenario import scenario_from_dict
from hetcell.simulation import Simulation, run

UPLINK_CLASSES = ("ul_data", "ul_transport_ack", "ul_mac_ack", "ul_mgmt")


def simulate(data):
    sim = Simulation(scenario_from_dict(data))
    return sim, sim.run()


# ---- reproducibility and accounting ----


class TestRunBasics:
    def test_same_seed_same_output(self, small_cell):
        first = emit(run(scenario_from_dict(small_cell)), "json")
        second = emit(run(scenario_from_dict(small_cell)), "json")
        assert first == second

    def test_seed_changes_outcome(self, small_cell):
        a = run(scenario_from_dict(small_cell))
        small_cell["seed"] += 1
        b = run(scenario_from_dict(small_cell))
        assert (a.tx_attempts, a.collisions, a.goodput_bytes) != (b.tx_attempts, b.collisions, b.goodput_bytes)

    @pytest.mark.parametrize("mode", [m.value for m in Mode])
    def test_time_accounting(self, small_cell, mode):
        small_cell["mode"] = mode
        report = run(scenario_from_dict(small_cell))
        assert report.accounted_us == report.duration_us
        assert report.idle_us >= 0

    def test_single_station_matches_closed_form(self, oracle_like):
        """One saturated station: 12000 bits per DIFS + 7.5 slots + data + SIFS + ACK."""
        oracle_like["duration_s"] = 2.0
        report = run(scenario_from_dict(oracle_like))
        assert report.goodput_mbps("uplink") == pytest.approx(12000 / 393.5, rel=0.01)
        assert report.collisions == 0

    def test_report_echoes_config(self, small_cell):
        report = run(scenario_from_dict(small_cell))
        assert report.config["seed"] == small_cell["seed"]
        assert len(report.stations) == small_cell["clients"]


# ---- per-mode routing ----


class TestModeRouting:
    def test_standard_uses_wifi_both_ways(self, small_cell):
        report = run(scenario_from_dict(small_cell))
        assert report.airtime_us["ul_data"] > 0
        assert report.airtime_us["dl_data"] > 0
        assert report.goodput_mbps("uplink", "lte_native") == 0.0

    def test_loose_uplink_data_leaves_wifi(self, small_cell):
        small_cell["mode"] = "loose"
        report = run(scenario_from_dict(small_cell))
        assert report.airtime_us["ul_data"] == 0
        assert report.airtime_us["ul_transport_ack"] > 0
        assert report.goodput_mbps("uplink", "lte_native") > 0

    def test_tight_keeps_only_control_on_wifi_uplink(self, small_cell):
        small_cell["mode"] = "tight"
        report = run(scenario_from_dict(small_cell))
        assert report.airtime_us["ul_data"] == 0
        assert report.airtime_us["ul_transport_ack"] == 0
        assert report.airtime_us["ul_mgmt"] > 0
        assert report.goodput_mbps("downlink", "wifi") > 0
        assert report.goodput_mbps("downlink", "lte_native") > 0

    def test_hybrid_silences_client_transmitters(self, small_cell):
        small_cell["mode"] = "hybrid"
        report = run(scenario_from_dict(small_cell))
        assert all(report.airtime_us[c] == 0 for c in UPLINK_CLASSES)
        assert report.goodput_mbps("uplink", "lte_tunnel") > 0
        assert report.goodput_mbps("downlink", "wifi") > 0
        assert report.association["associated"] == small_cell["clients"]


# ---- association ----


class TestAssociation:
    def test_all_ring_clients_associate(self, small_cell):
        report = run(scenario_from_dict(small_cell))
        assert report.association == {"associated": 4, "lte_only": 0, "failed": 0}

    def test_far_standard_client_is_lte_only(self):
        sim, report = simulate({"clients": [{"x": 40, "y": 0}], "duration_s": 0.3, "mgmt": {"interval_us": 0}})
        node = sim.nodes[0]
        assert node.association is Association.LTE_ONLY
        assert node.mode is None
        assert report.airtime_us["ul_data"] == 0
        assert report.goodput_mbps("uplink", "lte_native") > 0
        assert report.goodput_mbps("downlink", "lte_native") > 0

    def test_far_hybrid_client_keeps_wifi_downlink(self):
        sim, report = simulate({"mode": "hybrid", "clients": [{"x": 40, "y": 0}], "duration_s": 0.3})
        assert sim.nodes[0].association is Association.ASSOCIATED
        assert report.goodput_mbps("downlink", "wifi") > 0

    def test_legacy_client_in_hybrid_cell(self):
        sim = Simulation(scenario_from_dict({
            "mode": "hybrid",
            "clients": [{"x": 10, "y": 0}, {"x": -10, "y": 0, "mode": "standard"}],
        }))
        sim.start()
        assert [n.mode for n in sim.nodes] == [Mode.HYBRID, Mode.STANDARD]

    def test_mixed_cell_keeps_contention_window(self):
        sim, _ = simulate({
            "mode": "hybrid", "duration_s": 0.1,
            "clients": [{"x": 10, "y": 0}, {"x": -10, "y": 0, "mode": "standard"}],
        })
        assert sim.ap.cw_floor == 15

    def test_all_hybrid_cell_drops_ap_window(self, small_cell):
        small_cell.update(mode="hybrid", duration_s=0.1)
        sim, _ = simulate(small_cell)
        assert sim.ap.cw_floor == 0


# ---- interferers ----


class TestInterferers:
    def test_interference_airtime(self, small_cell):
        small_cell["duration_s"] = 1.0
        small_cell["interferers"] = [{"x": 30, "y": 30, "start_s": 0.0, "stop_s": 0.5}]
        report = run(scenario_from_dict(small_cell))
        assert report.airtime_us["interference"] == 500_000
        assert report.accounted_us == report.duration_us


# ---- downlink-only windows ----


class TestDownlinkOnly:
    def test_no_client_access_inside_windows(self, small_cell):
        small_cell.update(duration_s=1.0, trace=True,
                          downlink_only={"enabled": True, "period_us": 100_000, "window_us": 32_000})
        sim, _ = simulate(small_cell)
        windows = sim.ap.reservations
        assert windows
        assert all(end - start == 32_000 for start, end in windows)
        assert len(windows) + sim.ap.stats.reservations_lost == 9
        client_access = [r.time_us for r in sim.kernel.trace if r.name == "access" and r.station >= 1]
        for start, end in windows:
            assert not [t for t in client_access if start < t < end]
        assert sim.channel.stats.airtime_us["dl_cts_self"] > 0


# ---- tunnel ----


class TestTunnel:
    @pytest.mark.parametrize("path,latency", [("via_core", 10_000), ("direct_enb_ap", 2_000)])
    def test_conservation_after_traffic_stops(self, small_cell, path, latency):
        small_cell.update(mode="hybrid", duration_s=1.0, traffic_stop_s=0.5,
                          tunnel={"path": path}, mgmt={"interval_us": 0})
        sim, report = simulate(small_cell)
        tunnel = report.tunnel
        assert tunnel["sent_bytes"] == tunnel["ingested_bytes"] > 0
        assert tunnel["in_flight_frames"] == 0
        assert tunnel["mean_transit_us"] == pytest.approx(latency)
        assert sim.ap_ingest.uplink_bytes[Interface.LTE_TUNNEL] == tunnel["sent_bytes"]

    def test_direct_path_is_faster(self, small_cell):
        small_cell.update(mode="hybrid", duration_s=0.5)
        core = run(scenario_from_dict(small_cell)).tunnel
        small_cell["tunnel"] = {"path": "direct_enb_ap"}
        direct = run(scenario_from_dict(small_cell)).tunnel
        assert core["mean_transit_us"] - direct["mean_transit_us"] == pytest.approx(8000)
        assert direct["mean_latency_us"] < core["mean_latency_us"]

    def test_tunneled_uplink_is_not_mistaken_for_duplicates(self, small_cell):
        small_cell.update(mode="hybrid", duration_s=0.5)
        sim, report = simulate(small_cell)
        assert sim.ap_ingest.duplicates == 0
        assert report.goodput_mbps("uplink", "lte_tunnel") > 0
        assert sim.tracker.acked > 0
