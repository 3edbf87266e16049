# Copyright 2024
# Directory: fedgw-sim/app/simulation/engine.py

"""
Simulation Engine - Deterministic Discrete-Event Federation Run.

The engine owns the clock, the event queue, the radio topology and every
gateway agent. Each gateway runs its own monitoring cycles:

1. At cycle start the BSS demand is turned into throughput grants
   (allocate_cycle_throughput) and then into frame send times.
2. Frames are transmitted in time order, each failing with its link PER and
   driving AARF, and fed to the gateway's monitor until the cycle completes.
3. At cycle end the monitor closes the cycle, the gateway is assessed and
   may start an offload procedure.

Federation messages travel over a bus with fixed latency (and optional loss)
and are dispatched through the handler registry. The engine implements the
FederationContext the handlers use.

Usage:
    from app.simulation import run_scenario

    result = run_scenario(config, out_dir=Path("runs/light10"))
    print(result.manifest.final_on_count)
"""

import logging
import time as wallclock
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .. import __version__
from ..agents.gateway import GatewayAgent
from ..agents.handlers import handler_registry
from ..config.settings import Settings, get_settings
from ..schemas.entities import (
    Direction,
    FrameMeta,
    LinkState,
    MacParams,
    ProbeObservation,
    Thresholds,
    TrafficClass,
)
from ..schemas.results import AssociationRecord, CycleRecord, GatewayRecord, ProtocolRecord, RunManifest
from ..schemas.scenario import ProtocolConfig, ScenarioConfig
from ..services.assessment import assess_status
from ..services.channel import aarf_update, packet_error_rate
from ..services.mac_model import saturation_throughput, single_node_capacity
from .allocation import BssAllocation, NodeDemand, allocate_cycle_throughput, damp_elastic
from .events import Event, EventKind, EventQueue
from .invariants import InvariantChecker
from .metrics import BUNDLE_FILES, MANIFEST_FILE, SCENARIO_FILE, MetricsRecorder, canonical_dump, config_hash
from .rng import RngStreams
from .topology import Topology
from .traffic import ClassDemand, FrameStream, TrafficSchedule

logger = logging.getLogger(__name__)

# 802.11 long retry limit: attempts per frame before it is dropped
RETRY_LIMIT = 7


class StreamPlan(BaseModel):
    """One frame stream of a cycle."""
    key: str
    node: str
    peer: Optional[str] = None
    direction: Direction
    traffic_class: TrafficClass
    payload_bits: float
    throughput: float
    offered: float = Field(0.0, description="Offered inelastic load behind the stream (bit/s)")
    times: List[float] = Field(default_factory=list)
    sent: int = 0
    delivered_bits: float = 0.0


class CyclePlan(BaseModel):
    """What a gateway transmits during its running cycle."""
    start: float
    end: Optional[float] = None
    allocation: BssAllocation = Field(default_factory=BssAllocation)
    streams: List[StreamPlan] = Field(default_factory=list)


class RunResult(BaseModel):
    """Outcome of one run."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    manifest: RunManifest
    recorder: MetricsRecorder
    wall_clock_s: float = 0.0
    files: List[Path] = Field(default_factory=list)


class SimulationEngine:
    """
    One deterministic run of a scenario.

    Attributes:
        config: The validated scenario
        gateways: Gateway agents by id
        association: Station MAC -> gateway id (None while reassociating)
        checker: Global invariant checker
        recorder: Output rows of the run
    """

    def __init__(
        self,
        config: ScenarioConfig,
        check_invariants: Optional[bool] = None,
        stop_at_steady_state: bool = False,
        record_cycles: bool = True,
        settings: Optional[Settings] = None,
    ):
        self.config = config
        self.settings = settings or get_settings()
        strict = self.settings.check_invariants if check_invariants is None else check_invariants
        self.stop_at_steady_state = stop_at_steady_state

        self.streams = RngStreams(config.seed)
        self.topology = Topology(config, self.streams)
        self.traffic = TrafficSchedule(config.all_flows())
        self.checker = InvariantChecker(strict=strict, bus_latency=config.protocol.bus_latency)
        self.queue = EventQueue(on_past_event=self._past_event)
        self.recorder = MetricsRecorder(record_cycles=record_cycles)

        self.gateways: Dict[str, GatewayAgent] = {}
        for g in config.topology.gateways:
            self.gateways[g.id] = GatewayAgent(
                gateway_id=g.id,
                mac_address=self.topology.gateway_macs[g.id],
                channel=g.channel,
                mac=config.mac,
                alpha=config.monitor.ewma_alpha,
                T_max=config.monitor.T_max,
                on=g.initially_on,
            )
        self.epoch: Dict[str, int] = {gid: 0 for gid in self.gateways}
        self.association: Dict[str, Optional[str]] = {}
        self.in_transit: Dict[str, str] = {}
        self.uplinks: Dict[str, LinkState] = {}
        self.downlinks: Dict[str, LinkState] = {}
        self.frame_streams: Dict[str, FrameStream] = {}
        self.elastic_grants: Dict[str, float] = {}
        self.plans: Dict[str, CyclePlan] = {}

        changes = [t for t in self.traffic.change_times() if t <= config.duration]
        self.last_traffic_change = max(changes, default=0.0)
        self.last_activity = 0.0
        self.steady_state_time: Optional[float] = None
        self.message_counts: Counter = Counter()
        self.min_on_count = self.on_count
        self.delivered: List[Tuple[float, float, float]] = []

    # =========================================================================
    # FederationContext
    # =========================================================================

    @property
    def now(self) -> float:
        return self.queue.now

    @property
    def protocol(self) -> ProtocolConfig:
        return self.config.protocol

    @property
    def thresholds(self) -> Thresholds:
        return self.config.thresholds

    @property
    def mac(self) -> MacParams:
        return self.config.mac

    def rng(self, label: str) -> np.random.Generator:
        return self.streams.stream(label)

    def schedule_timer(self, gateway_id: str, delay: float, name: str, payload: Dict) -> None:
        self.queue.push(
            self.now + delay, EventKind.TIMER, gateway_id,
            {"name": name, "payload": dict(payload), "epoch": self.epoch[gateway_id]},
        )

    def probe_stations(self, requester_id: str) -> List[Tuple[str, int]]:
        """
        The requester's RTS probe sequence: one (station, AID hash) per station.

        The RTS duration field is SIFS + CTS time + hash, so the CTS each
        station sends back carries the hash to anyone who hears it.
        """
        requester = self.gateways[requester_id]
        return [(mac, requester.hashed_aid(mac)) for mac in sorted(requester.stations)]

    def probe(self, listener_id: str, requester_id: str) -> List[ProbeObservation]:
        cts_bits = self.mac.phy_header_bits + self.mac.ack_bits
        observations = []
        for station, hashed in self.probe_stations(requester_id):
            if not self.topology.hears_cts(station, listener_id, cts_bits):
                continue
            observations.append(ProbeObservation(
                hashed_aid=hashed,
                snr=self.topology.snr(station, listener_id),
                inferred_rate=self.topology.usable_rate(station, listener_id),
            ))
        logger.debug(f"{listener_id} heard {len(observations)} probe CTS from the BSS of {requester_id}")
        return observations

    def power(self, gateway_id: str, on: bool) -> None:
        gateway = self.gateways[gateway_id]
        if on == gateway.on:
            return
        self.epoch[gateway_id] += 1
        if on:
            gateway.power_on(self.now, woken=True)
            self.checker.on_power_on(self.now, gateway_id)
            logger.info(f"{gateway_id} switched on at t={self.now:.3f}s")
        else:
            self.checker.on_power_off(self.now, gateway_id, set(gateway.stations))
            gateway.power_off()
            self.plans.pop(gateway_id, None)
            logger.info(f"{gateway_id} switched off at t={self.now:.3f}s")
        self._record_gateway(gateway)
        self._activity()
        if on:
            self._start_cycle(gateway)

    def reassociate(self, assignments: Dict[str, str], origin: str, reason: str) -> None:
        delay = self.settings.reassociation_delay
        for station in sorted(assignments):
            if self.association.get(station) != origin:
                continue
            self._disassociate(station)
            self.in_transit[station] = origin
            self.queue.push(
                self.now + delay, EventKind.REASSOCIATION, station,
                {"origin": origin, "reason": reason},
            )
        self.queue.push(self.now + delay, EventKind.SHUTDOWN_CHECK, origin, {"epoch": self.epoch[origin]})

    # =========================================================================
    # Run
    # =========================================================================

    @property
    def on_count(self) -> int:
        return sum(1 for g in self.gateways.values() if g.on)

    def run(self) -> RunResult:
        """Run the scenario to its duration (or steady state); returns the result."""
        started = wallclock.perf_counter()
        duration = self.config.duration
        logger.info(
            f"Running '{self.config.name}' seed={self.config.seed} for {duration}s: "
            f"{len(self.gateways)} gateways, {len(self.topology.stations)} stations"
        )
        self._initialize(record=duration > 0)

        end = duration
        while len(self.queue) and self.queue.peek_time() <= duration:
            self._dispatch(self.queue.pop())
            if self.stop_at_steady_state and self.steady_state_time is not None:
                end = self.now
                logger.info(f"Steady state at t={self.steady_state_time:.3f}s, stopping")
                break

        if duration > 0 and not self.in_transit:
            self.checker.check_associations(end, self.association, self._members(), self._power_map())
        manifest = self._manifest(end)
        elapsed = wallclock.perf_counter() - started
        logger.info(
            f"Finished '{self.config.name}' in {elapsed:.2f}s: {manifest.final_on_count} gateways on, "
            f"{sum(manifest.message_counts.values())} messages, {len(manifest.invariant_violations)} violations"
        )
        return RunResult(manifest=manifest, recorder=self.recorder, wall_clock_s=elapsed)

    def _initialize(self, record: bool) -> None:
        for gateway in self.gateways.values():
            if gateway.on:
                self.checker.on_power_on(0.0, gateway.gateway_id)
        for mac in sorted(self.topology.stations):
            home = self.topology.stations[mac].home
            self._associate(mac, home, reason="initial", origin="", record=record)
        if not record:
            return
        for gateway in self.gateways.values():
            self._record_gateway(gateway)
        for t in self.traffic.change_times():
            if 0 < t <= self.config.duration:
                self.queue.push(t, EventKind.TRAFFIC_CHANGE)
        for gateway in self.gateways.values():
            if gateway.on:
                self._start_cycle(gateway)

    def _dispatch(self, event: Event) -> None:
        if event.kind == EventKind.CYCLE_END:
            self._on_cycle_end(event)
        elif event.kind == EventKind.TIMER:
            self._on_timer(event)
        elif event.kind == EventKind.DELIVERY:
            self._on_delivery(event)
        elif event.kind == EventKind.TRAFFIC_CHANGE:
            logger.debug(f"Traffic change at t={self.now:.3f}s")
            self._activity()
        elif event.kind == EventKind.REASSOCIATION:
            self._on_reassociation(event)
        elif event.kind == EventKind.SHUTDOWN_CHECK:
            self._on_shutdown_check(event)

    def _past_event(self, time: float, now: float, event: Event) -> None:
        self.checker.on_past_event(time, now, event.kind.value)

    def _activity(self) -> None:
        self.last_activity = self.now

    def _check_steady(self) -> None:
        if self.steady_state_time is not None or self.now < self.last_traffic_change:
            return
        window = self.settings.steady_state_window
        if self.now - max(self.last_activity, self.last_traffic_change) >= window:
            self.steady_state_time = max(self.last_activity, self.last_traffic_change) + window

    # =========================================================================
    # Associations
    # =========================================================================

    def _associate(self, station: str, gateway_id: str, reason: str, origin: str, record: bool = True) -> None:
        gateway = self.gateways[gateway_id]
        gateway.associate(station)
        self.association[station] = gateway_id
        self.uplinks[station] = self.topology.link(station, gateway_id)
        self.downlinks[station] = self.topology.link(station, gateway_id)
        if record:
            self.recorder.add_association(AssociationRecord(
                time=self.now, station=station, from_gateway=origin, to_gateway=gateway_id, reason=reason,
            ))
        logger.debug(f"{station} associated to {gateway_id} ({reason})")

    def _disassociate(self, station: str) -> None:
        gateway_id = self.association.get(station)
        if gateway_id is not None:
            self.gateways[gateway_id].disassociate(station)
        self.association[station] = None
        self.uplinks.pop(station, None)
        self.downlinks.pop(station, None)
        for key in [k for k in self.frame_streams if station in k.split(">")]:
            del self.frame_streams[key]
            self.elastic_grants.pop(key, None)

    def _members(self) -> Dict[str, set]:
        return {gid: set(g.stations) for gid, g in self.gateways.items()}

    def _power_map(self) -> Dict[str, bool]:
        return {gid: g.on for gid, g in self.gateways.items()}

    def _on_reassociation(self, event: Event) -> None:
        station = event.target
        origin = event.payload["origin"]
        reason = event.payload["reason"]
        self.in_transit.pop(station, None)

        authorized = [gid for gid, g in self.gateways.items() if g.on and station in g.authorized]
        target = self.topology.best_gateway(station, authorized)
        if target is None:
            reason = "fallback"
            target = self.topology.best_gateway(station, [gid for gid, g in self.gateways.items() if g.on])
            if target is None:
                target = self.topology.best_gateway(station, self.gateways)
                self.power(target, True)
            logger.warning(f"{station} found no authorizing gateway, falling back to {target}")
        self._associate(station, target, reason=reason, origin=origin)
        self._activity()
        if not self.in_transit:
            self.checker.check_associations(self.now, self.association, self._members(), self._power_map())

    def _on_shutdown_check(self, event: Event) -> None:
        gateway = self.gateways[event.target]
        epoch = self.epoch[gateway.gateway_id]
        if event.payload.get("epoch") != epoch or not gateway.on or not gateway.pending_shutdown:
            return
        if any(origin == gateway.gateway_id for origin in self.in_transit.values()):
            self.queue.push(
                self.now + self.settings.reassociation_delay, EventKind.SHUTDOWN_CHECK, gateway.gateway_id,
                {"epoch": epoch},
            )
            return
        if gateway.stations:
            logger.info(f"{gateway.gateway_id} keeps {len(gateway.stations)} station(s), staying on")
            gateway.pending_shutdown = False
            return
        self.power(gateway.gateway_id, False)

    # =========================================================================
    # Messages and timers
    # =========================================================================

    def _send(self, sender: GatewayAgent, message) -> None:
        self.checker.on_send(self.now, message, sender.on, sender.status)
        self.message_counts[message.message_type.value] += 1
        self.recorder.add_message(ProtocolRecord(
            time=self.now,
            type=message.message_type.value,
            procedure=message.procedure_id,
            origin=message.origin,
            destination=message.destination or "*",
            summary=message.summary(),
        ))
        self._activity()

        if message.destination is not None:
            targets = [message.destination]
        else:
            targets = [gid for gid in self.gateways if gid != message.origin]
        for target in targets:
            if self.protocol.bus_loss > 0 and self.streams.stream("bus").random() < self.protocol.bus_loss:
                logger.warning(f"Bus lost {message.message_type.value} {message.procedure_id} to {target}")
                continue
            self.queue.push(self.now + self.protocol.bus_latency, EventKind.DELIVERY, target, {"message": message})

    def _on_delivery(self, event: Event) -> None:
        gateway = self.gateways[event.target]
        for reply in handler_registry.dispatch(gateway, event.payload["message"], self):
            self._send(gateway, reply)

    def _on_timer(self, event: Event) -> None:
        gateway = self.gateways[event.target]
        if event.payload.get("epoch") != self.epoch[gateway.gateway_id]:
            return
        for message in gateway.on_timer(event.payload["name"], event.payload["payload"], self):
            self._send(gateway, message)

    # =========================================================================
    # Cycles
    # =========================================================================

    def _demands(self, gateway: GatewayAgent) -> Tuple[List[NodeDemand], Dict[str, ClassDemand], Dict[str, ClassDemand]]:
        uplink: Dict[str, ClassDemand] = {}
        downlink: Dict[str, ClassDemand] = {}
        demands: List[NodeDemand] = []
        for station in sorted(gateway.stations):
            up = self.traffic.demand(station, Direction.UPLINK, self.now)
            if up.total > 0:
                uplink[station] = up
                demands.append(NodeDemand(
                    node=station,
                    inelastic=up.inelastic,
                    elastic=up.elastic,
                    inelastic_payload=up.inelastic_payload,
                    elastic_payload=up.elastic_payload,
                    rate=self.uplinks[station].current_rate,
                ))
            down = self.traffic.demand(station, Direction.DOWNLINK, self.now)
            if down.total > 0:
                downlink[station] = down
        if downlink:
            peers = sorted(downlink)
            demands.append(NodeDemand(
                node=gateway.gateway_id,
                inelastic=sum(downlink[p].inelastic for p in peers),
                elastic=sum(downlink[p].elastic for p in peers),
                inelastic_payload=float(np.mean([downlink[p].inelastic_payload for p in peers])),
                elastic_payload=float(np.mean([downlink[p].elastic_payload for p in peers])),
                rate=float(np.mean([self.downlinks[p].current_rate for p in peers])),
            ))
        return demands, uplink, downlink

    def _stream(self, plans: List[StreamPlan], key: str, node: str, peer: Optional[str], direction: Direction,
                cls: TrafficClass, payload: float, granted: float, offered: float) -> None:
        if cls == TrafficClass.ELASTIC:
            granted = damp_elastic(self.elastic_grants.get(key, 0.0), granted, self.config.monitor.elastic_damping)
            self.elastic_grants[key] = granted
        if granted <= 0:
            return
        plans.append(StreamPlan(
            key=key, node=node, peer=peer, direction=direction, traffic_class=cls,
            payload_bits=payload, throughput=granted, offered=offered,
        ))

    def _plan_cycle(self, gateway: GatewayAgent) -> CyclePlan:
        demands, uplink, downlink = self._demands(gateway)
        last = gateway.monitor.last_stats
        allocation = allocate_cycle_throughput(
            demands, self.mac, self.config.monitor.T_max, p_e=last.filtered_per if last else 0.0,
        )
        streams: List[StreamPlan] = []
        for station, up in uplink.items():
            grant = allocation.grants[station]
            self._stream(streams, f"{station}>i", station, None, Direction.UPLINK, TrafficClass.INELASTIC,
                         up.inelastic_payload, grant.inelastic, up.inelastic)
            self._stream(streams, f"{station}>e", station, None, Direction.UPLINK, TrafficClass.ELASTIC,
                         up.elastic_payload, grant.elastic, 0.0)

        if downlink:
            grant = allocation.grants[gateway.gateway_id]
            total_inelastic = sum(d.inelastic for d in downlink.values())
            greedy = [p for p, d in downlink.items() if np.isinf(d.elastic)]
            finite_elastic = sum(d.elastic for p, d in downlink.items() if p not in greedy)
            for peer in sorted(downlink):
                d = downlink[peer]
                inelastic = grant.inelastic * d.inelastic / total_inelastic if total_inelastic > 0 else 0.0
                if greedy:
                    elastic = grant.elastic / len(greedy) if peer in greedy else 0.0
                else:
                    elastic = grant.elastic * d.elastic / finite_elastic if finite_elastic > 0 else 0.0
                key = f"{gateway.gateway_id}>{peer}"
                self._stream(streams, f"{key}>i", gateway.gateway_id, peer, Direction.DOWNLINK,
                             TrafficClass.INELASTIC, d.inelastic_payload, inelastic, d.inelastic)
                self._stream(streams, f"{key}>e", gateway.gateway_id, peer, Direction.DOWNLINK,
                             TrafficClass.ELASTIC, d.elastic_payload, elastic, 0.0)
                if inelastic > 0:
                    gateway.monitor.mark_pending_downlink(peer)
        return CyclePlan(start=self.now, allocation=allocation, streams=streams)

    def _transmit(self, gateway: GatewayAgent, stream: StreamPlan, t: float) -> None:
        if stream.direction == Direction.UPLINK:
            link = self.uplinks[stream.node]
        else:
            link = self.downlinks[stream.peer]
        rng = self.streams.stream(f"frames:{gateway.gateway_id}")
        length = stream.payload_bits + self.mac.mac_header_bits
        for _ in range(RETRY_LIMIT):
            rate = link.current_rate
            per = packet_error_rate(link.snr, rate, length)
            success = bool(rng.random() >= per)
            gateway.monitor.observe(FrameMeta(
                node=stream.node,
                peer=stream.peer,
                direction=stream.direction,
                traffic_class=stream.traffic_class,
                payload_bits=stream.payload_bits,
                rate=rate,
                success=success,
                timestamp=t,
                per=per,
            ))
            aarf_update(link, success)
            if success:
                stream.delivered_bits += stream.payload_bits
                return

    def _start_cycle(self, gateway: GatewayAgent) -> None:
        """Plan the cycle, transmit its frames and schedule its end."""
        start = self.now
        gateway.monitor.start_cycle(start)
        plan = self._plan_cycle(gateway)
        horizon = start + self.config.monitor.T_max

        entries: List[Tuple[float, int]] = []
        for index, stream in enumerate(plan.streams):
            frames = self.frame_streams.get(stream.key)
            if frames is None or frames.payload_bits != stream.payload_bits:
                frames = FrameStream(payload_bits=stream.payload_bits)
                self.frame_streams[stream.key] = frames
            stream.times = frames.schedule(start, horizon, stream.throughput)
            entries.extend((t, index) for t in stream.times)
        entries.sort()

        end = horizon
        i = 0
        while i < len(entries):
            t = entries[i][0]
            while i < len(entries) and entries[i][0] == t:
                stream = plan.streams[entries[i][1]]
                self._transmit(gateway, stream, t)
                stream.sent += 1
                i += 1
            if gateway.monitor.is_complete(t):
                end = t
                break
        for stream in plan.streams:
            self.frame_streams[stream.key].consume(stream.times, stream.sent)

        plan.end = end
        self.plans[gateway.gateway_id] = plan
        self.queue.push(end, EventKind.CYCLE_END, gateway.gateway_id, {"epoch": self.epoch[gateway.gateway_id]})

    def _check_conservation(self, gateway: GatewayAgent, plan: CyclePlan, duration: float) -> None:
        delivered: Dict[str, float] = {}
        offered: Dict[str, float] = {}
        slack: Dict[str, float] = {}
        for stream in plan.streams:
            if stream.traffic_class != TrafficClass.INELASTIC:
                continue
            delivered[stream.key] = stream.delivered_bits
            offered[stream.key] = stream.offered * duration
            slack[stream.key] = stream.payload_bits
        self.checker.on_cycle(self.now, gateway.gateway_id, delivered, offered, slack)

    def _on_cycle_end(self, event: Event) -> None:
        gateway = self.gateways[event.target]
        if not gateway.on or event.payload.get("epoch") != self.epoch[gateway.gateway_id]:
            return
        plan = self.plans.get(gateway.gateway_id)
        stats = gateway.monitor.close(self.now)
        profiles = gateway.monitor.active_profiles()
        if stats.n_active >= 1:
            sat = saturation_throughput(stats, self.mac)
        else:
            sat = single_node_capacity(stats, self.mac)
        report = assess_status(stats, profiles, sat, self.thresholds)

        self.checker.forget_closed(self.now - self.checker.bus_latency)
        if plan is not None:
            self._check_conservation(gateway, plan, stats.cycle_duration)
            inelastic = sum(s.delivered_bits for s in plan.streams if s.traffic_class == TrafficClass.INELASTIC)
            elastic = sum(s.delivered_bits for s in plan.streams if s.traffic_class == TrafficClass.ELASTIC)
            self.delivered.append((self.now, inelastic, elastic))

        previous = gateway.report.status if gateway.report else None
        gateway.record_cycle(report, stats, sat, profiles)
        if previous != report.status:
            logger.debug(f"{gateway.gateway_id} status {previous} -> {report.status.value} at t={self.now:.3f}s")
            self._activity()

        self.recorder.add_cycle(CycleRecord(
            time=self.now,
            gateway=gateway.gateway_id,
            cycle=gateway.monitor.cycle_index,
            n_active=stats.n_active,
            cycle_duration=stats.cycle_duration,
            avg_payload=stats.avg_payload,
            max_payload=stats.max_payload,
            avg_rate=stats.avg_rate,
            p_e=stats.filtered_per,
            S=report.saturation,
            S_n=report.per_node,
            B=report.available_bandwidth,
            b_over_S=report.b_over_s,
            status=report.status.value,
        ))

        request = gateway.maybe_start_procedure(self)
        if request is not None:
            self._send(gateway, request)
        self._start_cycle(gateway)
        self._check_steady()

    # =========================================================================
    # Output
    # =========================================================================

    def _record_gateway(self, gateway: GatewayAgent) -> None:
        on_count = self.on_count
        self.min_on_count = min(self.min_on_count, on_count)
        self.recorder.add_gateway(GatewayRecord(
            time=self.now,
            gateway=gateway.gateway_id,
            state="on" if gateway.on else "off",
            n_stations=len(gateway.stations),
            on_count=on_count,
        ))

    def _manifest(self, end: float) -> RunManifest:
        window = self.settings.steady_state_window
        since = max(0.0, end - window)
        span = end - since
        recent = [(i, e) for t, i, e in self.delivered if t > since]
        inelastic = sum(i for i, _ in recent) / span if span > 0 else 0.0
        elastic = sum(e for _, e in recent) / span if span > 0 else 0.0
        return RunManifest(
            scenario=self.config.name,
            seed=self.config.seed,
            duration=end,
            config_hash=config_hash(self.config),
            n_gateways=len(self.gateways),
            n_stations=len(self.topology.stations),
            final_on_count=self.on_count,
            min_on_count=self.min_on_count,
            steady_state_time=self.steady_state_time,
            message_counts=dict(sorted(self.message_counts.items())),
            invariant_violations=self.checker.messages,
            delivered_inelastic=inelastic,
            delivered_elastic=elastic,
            final_status={gid: g.status.value for gid, g in self.gateways.items()},
            final_stations={gid: len(g.stations) for gid, g in self.gateways.items()},
            package_version=__version__,
        )


def run_scenario(
    config: ScenarioConfig,
    out_dir: Optional[Path] = None,
    check_invariants: Optional[bool] = None,
    stop_at_steady_state: bool = False,
    record_cycles: bool = True,
    settings: Optional[Settings] = None,
) -> RunResult:
    """
    Run a scenario and optionally write its bundle.

    Args:
        config: Validated scenario
        out_dir: Directory for the CSV files and manifest; None keeps them in memory
        check_invariants: Abort on the first violation; None uses the settings
        stop_at_steady_state: End the run once steady state is detected
        record_cycles: Keep per-cycle rows (cycles.csv)
        settings: Process settings; defaults to the global instance

    Returns:
        RunResult with the manifest and recorded rows

    Raises:
        InvariantViolation: In strict mode, on the first violated invariant
        OSError: If the bundle cannot be written
    """
    engine = SimulationEngine(
        config,
        check_invariants=check_invariants,
        stop_at_steady_state=stop_at_steady_state,
        record_cycles=record_cycles,
        settings=settings,
    )
    result = engine.run()
    if out_dir is not None:
        files = [*BUNDLE_FILES, SCENARIO_FILE, MANIFEST_FILE]
        manifest = result.manifest.model_copy(update={"files": files})
        result.manifest = manifest
        result.files = engine.recorder.write(Path(out_dir), manifest, scenario_text=canonical_dump(config))
    return result
