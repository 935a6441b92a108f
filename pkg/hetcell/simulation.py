#!/usr/bin/env python3
"""
simulation.py - 単一セルのシミュレーション実行

Wires one scenario together: the Wi-Fi channel with the AP (sid 0), the
clients (sid 1..n) and any interferers, the LTE pipe, the hybrid tunnel,
and each client's flows.  Saturated sources keep exactly one segment
outstanding per flow (per lane for the tight-mode downlink bearer) and
refill when the carrying interface has taken it:

    Wi-Fi            MAC exchange finished (ACKed or dropped)
    LTE / tunnel     uplink or downlink grant completed
    AP -> hybrid     first transmission left the AP

Usage:
    report = run(load_scenario("scenarios/reference.json"))
"""

import logging
from functools import partial
from typing import Callable, Optional

from hetcell.channel import Channel, Frame
from hetcell.enums import (Association, Direction, FrameKind, Interface, MgmtSubtype, Mode, Role,
                           SsidKind, StreamPurpose, TrafficClass)
from hetcell.integration import (ApIngest, BearerSplitter, HybridAckTracker, SsidAdvert, decodable_ssids,
                                 route, select_mode)
from hetcell.kernel import Kernel
from hetcell.lte import LteLink, Tunnel
from hetcell.mac import Dcf, Interferer
from hetcell.metrics import MetricsReport, StationReport
from hetcell.radio import path_loss_db
from hetcell.scenario import ClientSpec, ScenarioConfig
from hetcell.traffic import LooseScheduler, Segment, TrafficSource, TransportReceiver

log = logging.getLogger(__name__)

AP_SID = 0

MGMT_REPLY = {
    MgmtSubtype.ASSOC_REQUEST: MgmtSubtype.ASSOC_RESPONSE,
    MgmtSubtype.PROBE_REQUEST: MgmtSubtype.PROBE_RESPONSE,
}


class ClientNode:
    """Per-client state across both radios."""

    def __init__(self, sid: int, spec: ClientSpec):
        self.sid = sid
        self.spec = spec
        self.mode: Optional[Mode] = None
        self.lte_only = False
        self.associated = False
        self.ap_associated = False
        self.dcf: Optional[Dcf] = None
        self.sources: dict[Direction, TrafficSource] = {}
        self.receivers: dict[Direction, TransportReceiver] = {}
        self.loose: Optional[LooseScheduler] = None
        self.splitter: Optional[BearerSplitter] = None
        self.mgmt_sent = 0
        self.probe_responses = 0
        self.assoc_event = None

    @property
    def association(self) -> Association:
        if self.lte_only:
            return Association.LTE_ONLY
        return Association.ASSOCIATED if self.associated else Association.FAILED

    def __repr__(self):
        return f"ClientNode(sid={self.sid}, mode={self.mode}, {self.association.value})"


class Simulation:
    """One run of one scenario; build, start, run_until, report."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.kernel = Kernel(config.seed, trace=config.trace)
        lb = config.link_budget
        self.channel = Channel(self.kernel, config.path_loss, lb.budget(config.ap.tx_power_dbm),
                               lb.carrier_sense_dbm)
        self.lte = LteLink(self.kernel, config.lte)
        self.tracker = HybridAckTracker(self.kernel, config.hybrid_ack_timeout_us, config.mac.retry_limit,
                                        requeue=self._requeue_downlink)
        self.ap_ingest = ApIngest(self.tracker, self._ap_receive)
        self.tunnel = Tunnel(self.kernel, self.lte, config.tunnel, self.ap_ingest.from_tunnel)
        self.transport_acks_sent = 0
        self.transport_acks_received = 0
        self.nodes: list[ClientNode] = []
        self.interferers: list[Interferer] = []
        self._build_stations()
        self._started = False

    # ==================================================================
    # topology
    # ==================================================================

    def _build_stations(self) -> None:
        cfg = self.config
        ch = self.channel
        ch.add_station(AP_SID, cfg.ap.position, cfg.ap.tx_power_dbm, Role.AP, indoor=cfg.ap.indoor)
        for sid, spec in enumerate(cfg.clients, start=1):
            ch.add_station(sid, spec.position, spec.tx_power_dbm, Role.CLIENT, indoor=spec.indoor)
        first_interferer = len(cfg.clients) + 1
        for sid, icfg in enumerate(cfg.interferers, start=first_interferer):
            ch.add_station(sid, icfg.position, icfg.tx_power_dbm, Role.INTERFERER)
        ch.build()

        k = self.kernel
        self.ap = Dcf(AP_SID, k, ch, cfg.mac, cfg.phy, k.stream(AP_SID, StreamPurpose.BACKOFF), Role.AP)
        self.ap.receive_handler = self.ap_ingest.from_air

        for sid, spec in enumerate(cfg.clients, start=1):
            node = ClientNode(sid, spec)
            node.dcf = Dcf(sid, k, ch, cfg.mac, cfg.phy, k.stream(sid, StreamPurpose.BACKOFF), Role.CLIENT)
            node.dcf.receive_handler = partial(self._client_frame, node)
            for direction in (Direction.UPLINK, Direction.DOWNLINK):
                node.receivers[direction] = TransportReceiver(sid, direction, cfg.ack_policy, cfg.flow.transport)
            self.nodes.append(node)

        for sid, icfg in enumerate(cfg.interferers, start=first_interferer):
            stop = None if icfg.stop_s is None else int(round(icfg.stop_s * 1e6))
            self.interferers.append(Interferer(sid, k, ch, int(round(icfg.start_s * 1e6)), stop, icfg.burst_us))

    def node(self, sid: int) -> ClientNode:
        return self.nodes[sid - 1]

    # ==================================================================
    # start-up and association
    # ==================================================================

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        cfg = self.config
        adverts = (SsidAdvert(SsidKind.STANDARD_ACCESS, cfg.ap.standard_ssid_dbm),
                   SsidAdvert(SsidKind.INTEGRATED_ACCESS, cfg.ap.integrated_ssid_dbm))
        for node in self.nodes:
            spec = node.spec
            loss = path_loss_db(cfg.path_loss, cfg.ap.position.distance_to(spec.position),
                                spec.indoor != cfg.ap.indoor)
            decodable = decodable_ssids(adverts, loss, cfg.link_budget.sensitivity_dbm)
            mode = select_mode(decodable, spec.capability, spec.mode)
            if mode is None:
                node.lte_only = True
                log.debug("client %d hears no usable SSID (loss %.1f dB), LTE only", node.sid, loss)
                self._start_traffic(node)
                continue
            node.mode = mode
            if mode is Mode.HYBRID:
                node.dcf.ack_redirect = self.tunnel.send
            if mode is Mode.LOOSE:
                node.loose = LooseScheduler(cfg.loose.wifi_uplink_cost, cfg.loose.wifi_downlink_cost,
                                            cfg.loose.lte_uplink_cost, cfg.loose.lte_downlink_cost,
                                            cfg.loose.weights)
            self.kernel.schedule(0, self._associate, node, name="associate", station=node.sid)

        for interferer in self.interferers:
            interferer.start()
        dl = cfg.downlink_only
        if dl.enabled:
            self.kernel.schedule(dl.period_us, self._downlink_window, name="dl_window", station=AP_SID)

    def _associate(self, node: ClientNode) -> None:
        if node.associated:
            return
        self._send_mgmt(node, MgmtSubtype.ASSOC_REQUEST)
        node.assoc_event = self.kernel.schedule_in(self.config.mgmt.assoc_retry_us, self._associate, node,
                                                   name="assoc_retry", station=node.sid)

    def _probe(self, node: ClientNode) -> None:
        self._send_mgmt(node, MgmtSubtype.PROBE_REQUEST)
        self.kernel.schedule_in(self.config.mgmt.interval_us, self._probe, node, name="probe", station=node.sid)

    def _send_mgmt(self, node: ClientNode, subtype: MgmtSubtype) -> None:
        frame = Frame(FrameKind.MGMT, node.sid, AP_SID, self.config.mgmt.bytes, segment=subtype,
                      created_us=self.kernel.now)
        node.mgmt_sent += 1
        if route(node.mode, TrafficClass.WIFI_MGMT) is Interface.LTE_TUNNEL:
            self.tunnel.send(frame)
        else:
            frame.requires_mac_ack = True
            node.dcf.enqueue(frame)

    def _ap_mgmt(self, node: ClientNode, frame: Frame) -> None:
        subtype = frame.segment
        if subtype is MgmtSubtype.ASSOC_REQUEST and not node.ap_associated:
            node.ap_associated = True
            self._retune_ap()
        reply = MGMT_REPLY.get(subtype)
        if reply is not None:
            self._ap_send(node, Frame(FrameKind.MGMT, AP_SID, node.sid, self.config.mgmt.bytes, segment=reply,
                                      created_us=self.kernel.now))

    def _client_mgmt(self, node: ClientNode, frame: Frame) -> None:
        if frame.segment is MgmtSubtype.PROBE_RESPONSE:
            node.probe_responses += 1
            return
        if frame.segment is not MgmtSubtype.ASSOC_RESPONSE or node.associated:
            return
        node.associated = True
        self.kernel.cancel(node.assoc_event)
        log.debug("t=%d client %d associated in %s mode", self.kernel.now, node.sid, node.mode.value)
        self._start_traffic(node)
        if self.config.mgmt.interval_us > 0:
            self.kernel.schedule_in(self.config.mgmt.interval_us, self._probe, node, name="probe",
                                    station=node.sid)

    def _retune_ap(self) -> None:
        wifi = [n for n in self.nodes if n.ap_associated]
        if wifi and all(n.mode is Mode.HYBRID for n in wifi):
            self.ap.set_cw_floor(self.config.hybrid.ap_cw_min)
        else:
            self.ap.set_cw_floor(self.config.mac.cw_min)

    def _downlink_window(self) -> None:
        dl = self.config.downlink_only
        self.ap.request_reservation(dl.window_us)
        self.kernel.schedule_in(dl.period_us, self._downlink_window, name="dl_window", station=AP_SID)

    # ==================================================================
    # traffic
    # ==================================================================

    def _start_traffic(self, node: ClientNode) -> None:
        cfg = self.config
        for direction in cfg.flow.directions:
            source = TrafficSource(self.kernel, cfg.flow, node.sid, direction,
                                   start_us=self.kernel.now, stop_us=cfg.traffic_stop_us)
            node.sources[direction] = source
            bearer_split = (direction is Direction.DOWNLINK
                            and self._data_interface(node, direction) is Interface.BEARER_SPLIT)
            if bearer_split:
                n = len(self.nodes)
                node.splitter = BearerSplitter(
                    self.kernel, node.sid, cfg.tight.epoch_us, cfg.flow.segment_bytes,
                    wifi_bootstrap_mbps=cfg.phy.data_rate_mbps / n,
                    lte_bootstrap_mbps=self.lte.downlink.capacity_mbps / n,
                    min_segments=cfg.tight.min_backlog_segments,
                    on_update=partial(self._fill_lanes, node))
                node.splitter.start()
            if not source.saturated:
                source.start(partial(self._dispatch, node))
            elif bearer_split:
                self._fill_lanes(node)
            else:
                self._pull(node, direction)

    def _data_interface(self, node: ClientNode, direction: Direction) -> Interface:
        if node.lte_only:
            return Interface.LTE_NATIVE
        cls = TrafficClass.UL_DATA if direction is Direction.UPLINK else TrafficClass.DL_DATA
        interface = route(node.mode, cls)
        if interface is Interface.PER_SCHEDULER:
            interface = node.loose.choose(direction, self.kernel.now) or Interface.WIFI
        return interface

    def _pull(self, node: ClientNode, direction: Direction) -> None:
        segment = node.sources[direction].next_segment()
        if segment is not None:
            self._dispatch(node, segment, refill=True)

    def _dispatch(self, node: ClientNode, segment: Segment, refill: bool = False) -> None:
        interface = self._data_interface(node, segment.direction)
        if interface is Interface.BEARER_SPLIT:
            lane = self._pick_lane(node)
            self._send_lane(node, segment, lane)
            return
        done = partial(self._pull, node, segment.direction) if refill else None
        self._send(node, segment, interface, done)

    # --- tight-mode downlink lanes ----------------------------------------

    def _pick_lane(self, node: ClientNode) -> Interface:
        splitter = node.splitter
        return max(BearerSplitter.LANES, key=lambda lane: splitter.targets[lane] - splitter.outstanding[lane])

    def _send_lane(self, node: ClientNode, segment: Segment, lane: Interface) -> None:
        node.splitter.on_enqueue(lane, segment.nbytes)
        self._send(node, segment, lane, partial(self._lane_drained, node, lane, segment.nbytes))

    def _lane_drained(self, node: ClientNode, lane: Interface, nbytes: int) -> None:
        node.splitter.on_drain(lane, nbytes)
        self._fill_lanes(node)

    def _fill_lanes(self, node: ClientNode) -> None:
        source = node.sources.get(Direction.DOWNLINK)
        if source is None or not source.saturated:
            return
        for lane in BearerSplitter.LANES:
            while node.splitter.lane_wants(lane):
                segment = source.next_segment()
                if segment is None:
                    return
                self._send_lane(node, segment, lane)

    # ==================================================================
    # carrying segments
    # ==================================================================

    def _send(self, node: ClientNode, segment: Segment, interface: Interface,
              done: Optional[Callable[[], None]] = None) -> None:
        now = self.kernel.now
        segment.interface = interface
        segment.sent_us = now
        kind = FrameKind.TRANSPORT_ACK if segment.is_ack else FrameKind.DATA
        on_item = (lambda item: done()) if done is not None else None

        if segment.direction is Direction.UPLINK:
            if interface is Interface.WIFI:
                frame = Frame(kind, node.sid, AP_SID, segment.nbytes, requires_mac_ack=True, segment=segment,
                              created_us=now, on_done=(lambda f, ok: done()) if done is not None else None)
                node.dcf.enqueue(frame)
            elif interface is Interface.LTE_TUNNEL:
                frame = Frame(kind, node.sid, AP_SID, segment.nbytes, segment=segment, created_us=now)
                self.tunnel.send(frame, on_sent=on_item)
            else:
                self.lte.enqueue_uplink(node.sid, segment.nbytes, payload=segment, on_sent=on_item,
                                        on_delivered=partial(self._lte_uplink_delivered, node))
            return

        if interface is Interface.WIFI:
            frame = Frame(kind, AP_SID, node.sid, segment.nbytes, segment=segment, created_us=now)
            self._ap_send(node, frame, done)
        elif interface is Interface.LTE_NATIVE:
            self.lte.enqueue_downlink(node.sid, segment.nbytes, payload=segment, on_sent=on_item,
                                      on_delivered=partial(self._lte_downlink_delivered, node))
        else:
            raise ValueError(f"no downlink path over {interface.value}")

    def _ap_send(self, node: ClientNode, frame: Frame, done: Optional[Callable[[], None]] = None) -> None:
        """Queue a downlink frame at the AP; hybrid clients acknowledge through the tunnel."""
        if node.mode is Mode.HYBRID:
            frame.requires_mac_ack = False

            def on_done(f: Frame, ok: bool) -> None:
                if self.tracker.sent(f) and done is not None:
                    done()
        else:
            frame.requires_mac_ack = True
            on_done = (lambda f, ok: done()) if done is not None else None
        frame.on_done = on_done
        self.ap.enqueue(frame)

    def _requeue_downlink(self, frame: Frame) -> None:
        self.ap.enqueue(frame, front=True)

    # ==================================================================
    # receiving
    # ==================================================================

    def _ap_receive(self, frame: Frame, via: Interface) -> None:
        node = self.node(frame.src)
        if frame.kind is FrameKind.MGMT:
            self._ap_mgmt(node, frame)
            return
        self._server_receive(node, frame.segment, via)

    def _lte_uplink_delivered(self, node: ClientNode, item) -> None:
        self._server_receive(node, item.payload, Interface.LTE_NATIVE)

    def _lte_downlink_delivered(self, node: ClientNode, item) -> None:
        self._client_receive(node, item.payload, Interface.LTE_NATIVE)

    def _client_frame(self, node: ClientNode, frame: Frame) -> None:
        if frame.kind is FrameKind.MGMT:
            self._client_mgmt(node, frame)
            return
        self._client_receive(node, frame.segment, Interface.WIFI)

    def _server_receive(self, node: ClientNode, segment: Segment, via: Interface) -> None:
        if segment.is_ack:
            self.transport_acks_received += 1
            return
        ack = node.receivers[Direction.UPLINK].on_segment_delivered(segment, via, self.kernel.now)
        self._observe(node, segment, via)
        if ack is not None:
            # acknowledgements of uplink data return the way the data came
            self.transport_acks_sent += 1
            back = Interface.LTE_NATIVE if via is Interface.LTE_NATIVE else Interface.WIFI
            self._send(node, ack, back)

    def _client_receive(self, node: ClientNode, segment: Segment, via: Interface) -> None:
        if segment.is_ack:
            self.transport_acks_received += 1
            return
        ack = node.receivers[Direction.DOWNLINK].on_segment_delivered(segment, via, self.kernel.now)
        self._observe(node, segment, via)
        if ack is not None:
            self.transport_acks_sent += 1
            if node.lte_only:
                interface = Interface.LTE_NATIVE
            else:
                interface = route(node.mode, TrafficClass.TRANSPORT_ACK_FOR_DL)
            self._send(node, ack, interface)

    def _observe(self, node: ClientNode, segment: Segment, via: Interface) -> None:
        if node.loose is None or via not in (Interface.WIFI, Interface.LTE_NATIVE):
            return
        now = self.kernel.now
        node.loose.monitor(via, segment.direction).on_delivery(now, now - segment.sent_us, segment.nbytes)

    # ==================================================================
    # run and report
    # ==================================================================

    def run(self) -> MetricsReport:
        cfg = self.config
        self.start()
        self.kernel.run_until(cfg.duration_us)
        self.channel.finalize(cfg.duration_us)
        report = self.report()
        log.info("run done: mode=%s clients=%d seed=%d ul=%.3f Mbps dl=%.3f Mbps collisions=%d",
                 report.mode, report.n_clients, report.seed, report.goodput_mbps("uplink"),
                 report.goodput_mbps("downlink"), report.collisions)
        return report

    def report(self) -> MetricsReport:
        cfg = self.config
        duration = cfg.duration_us
        dcfs = [self.ap] + [n.dcf for n in self.nodes]
        stats = self.channel.stats

        goodput: dict[str, int] = {}
        stations = []
        for node in self.nodes:
            per_iface: dict[str, int] = {}
            for direction, receiver in node.receivers.items():
                for iface, nbytes in receiver.bytes_by_interface.items():
                    key = f"{direction.value}/{iface.value}"
                    goodput[key] = goodput.get(key, 0) + nbytes
                    per_iface[key] = per_iface.get(key, 0) + nbytes
            stations.append(StationReport(
                sid=node.sid, x=node.spec.x, y=node.spec.y,
                configured_mode=node.spec.mode.value,
                mode=node.mode.value if node.mode is not None else None,
                association=node.association.value,
                uplink_mbps=node.receivers[Direction.UPLINK].goodput_bytes * 8.0 / duration,
                downlink_mbps=node.receivers[Direction.DOWNLINK].goodput_bytes * 8.0 / duration,
                bytes_by_interface=dict(sorted(per_iface.items())),
            ))

        association = {a.value: 0 for a in Association}
        for node in self.nodes:
            association[node.association.value] += 1

        ul, dl = self.lte.uplink, self.lte.downlink
        ts = self.tunnel.stats
        duplicates = (sum(d.stats.duplicates for d in dcfs) + self.ap_ingest.duplicates
                      + sum(r.duplicates for n in self.nodes for r in n.receivers.values()))

        return MetricsReport(
            mode=cfg.mode.value,
            n_clients=cfg.n_clients,
            seed=cfg.seed,
            duration_us=duration,
            goodput_bytes=goodput,
            collisions=stats.collisions,
            tx_attempts=sum(d.stats.tx_attempts for d in dcfs),
            retransmissions=sum(d.stats.retransmissions for d in dcfs),
            drops=sum(d.stats.drops for d in dcfs) + self.tracker.drops,
            hybrid_retransmissions=self.tracker.retransmissions,
            late_tunnel_acks=self.tracker.late_acks,
            duplicates=duplicates,
            airtime_us=dict(stats.airtime_us),
            idle_us=stats.idle_us,
            overlap_us=stats.overlap_us,
            lte={
                "ul_capacity_mbps": ul.capacity_mbps,
                "dl_capacity_mbps": dl.capacity_mbps,
                "ul_utilization": ul.utilization(duration),
                "dl_utilization": dl.utilization(duration),
                "ul_granted_bytes": ul.stats.granted_bytes,
                "dl_granted_bytes": dl.stats.granted_bytes,
                "ul_backlog_bytes": ul.backlog_bytes(),
                "dl_backlog_bytes": dl.backlog_bytes(),
            },
            tunnel={
                "path": cfg.tunnel.path.value,
                "latency_us": cfg.tunnel.latency_us,
                "sent_frames": ts.sent_frames,
                "sent_bytes": ts.sent_bytes,
                "ingested_frames": ts.ingested_frames,
                "ingested_bytes": ts.ingested_bytes,
                "in_flight_frames": ts.in_flight_frames,
                "mean_latency_us": ts.mean_latency_us,
                "mean_transit_us": ts.mean_transit_us,
            },
            transport_acks_sent=self.transport_acks_sent,
            transport_acks_received=self.transport_acks_received,
            association=association,
            stations=stations,
            config=cfg.to_dict(),
        )


def run(config: ScenarioConfig) -> MetricsReport:
    """Run one scenario to completion."""
    return Simulation(config).run()
