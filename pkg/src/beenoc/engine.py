"""Deterministic discrete-event core.

One global clock in integer cycles, a (time, seq) priority queue with
scheduling-order tie-breaks, uniform per-hop transit latency for every
packet, and the flow lifecycle: arrival, discovery, reservation, circuit
hold, teardown, with a setup timeout for flows that never establish.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from . import metrics, router
from .config import RunConfig
from .errors import ConfigError, DegenerateFlowError, InvariantViolationError
from .protocol import BackwardBee, ControlKind, ControlPacket, FlowId, ForwardBee, PortList
from .router import NodeState
from .topology import NON_LOCAL_PORTS, Mesh, Network, NodeId, PortDir


class FlowPhase(Enum):
    DISCOVERING = "Discovering"
    RESERVING = "Reserving"
    ESTABLISHED = "Established"
    TORN_DOWN = "TornDown"
    FAILED = "Failed"


_LEGAL_TRANSITIONS = {
    (FlowPhase.DISCOVERING, FlowPhase.RESERVING),
    (FlowPhase.RESERVING, FlowPhase.ESTABLISHED),
    (FlowPhase.ESTABLISHED, FlowPhase.TORN_DOWN),
    (FlowPhase.DISCOVERING, FlowPhase.FAILED),
    (FlowPhase.RESERVING, FlowPhase.FAILED),
}


@dataclass(frozen=True, slots=True)
class FlowSpec:
    """One offered traffic demand."""

    flow: FlowId
    source: NodeId
    destination: NodeId
    required_bandwidth: float
    arrival_time: int
    hold_time: int

    def __post_init__(self) -> None:
        if self.source == self.destination:
            raise DegenerateFlowError(f"flow {self.flow}: source equals destination")
        if self.required_bandwidth <= 0:
            raise ValueError(f"flow {self.flow}: required_bandwidth must be positive")
        if self.arrival_time < 0:
            raise ValueError(f"flow {self.flow}: arrival_time must be >= 0")
        if self.hold_time < 1:
            raise ValueError(f"flow {self.flow}: hold_time must be >= 1")


class EventKind(Enum):
    FLOW_ARRIVAL = "arrival"
    PACKET_DELIVERY = "deliver"
    FLOW_COMPLETE = "complete"
    SETUP_TIMEOUT = "timeout"


@dataclass(slots=True)
class Event:
    """Timestamped simulator occurrence. Events are processed in (time, seq)
    order; seq is assigned at scheduling time and strictly increases."""

    time: int
    seq: int
    kind: EventKind
    flow: FlowId | None = None
    node: NodeId | None = None
    packet: object = None
    arrival_port: PortDir | None = None


@dataclass(slots=True)
class FlowRecord:
    """Mutable per-flow lifecycle state kept by the engine."""

    spec: FlowSpec
    hop_limit: int
    phase: FlowPhase = FlowPhase.DISCOVERING
    setup_latency: int | None = None
    path_length: int | None = None
    winner_route: PortList | None = None
    winner_index: int | None = None
    forward_deliveries: int = 0

    @property
    def ever_established(self) -> bool:
        return self.phase in (FlowPhase.ESTABLISHED, FlowPhase.TORN_DOWN)


def _packet_kind(packet) -> str:
    if isinstance(packet, ForwardBee):
        return "forward"
    if isinstance(packet, BackwardBee):
        return "backward"
    return packet.kind.value


class Simulator:
    """Single-threaded deterministic event loop over one mesh network.

    The network may be pre-loaded with background reservations before run()
    to model frozen contention; the end-of-run conservation check accounts
    for wires held before the first event.
    """

    def __init__(self, config: RunConfig, workload: Sequence[FlowSpec]):
        self.config = config
        self.mesh = Mesh(config.mesh_width, config.mesh_height)
        self.network = Network(self.mesh, config.wire_count, config.wire_bandwidth)
        self.nodes = {n: NodeState(n) for n in self.mesh.nodes()}
        self.clock = 0
        self._seq = itertools.count()
        self._queue: list[tuple[int, int, Event]] = []
        self._records: dict[FlowId, FlowRecord] = {}
        self._trace: list[str] | None = [] if config.trace else None
        self._forward_cap = 4 * self.mesh.node_count
        self._events_processed = 0
        self._forward_deliveries = 0
        self._backward_deliveries = 0
        self._control_deliveries = 0
        self._util_acc = {p: 0 for p in NON_LOCAL_PORTS}
        self._util_peak = {p: 0.0 for p in NON_LOCAL_PORTS}
        for spec in workload:
            self._admit(spec)

    # -- construction -----------------------------------------------------

    def _admit(self, spec: FlowSpec) -> None:
        for node in (spec.source, spec.destination):
            if not self.mesh.contains(node):
                raise ConfigError(f"flow {spec.flow}: node {node} is outside the mesh")
        if spec.flow in self._records:
            raise ConfigError(f"duplicate flow id {spec.flow}")
        hop_limit = self.mesh.hop_limit(spec.source, spec.destination, self.config.hop_limit_metric)
        self._records[spec.flow] = FlowRecord(spec=spec, hop_limit=hop_limit)
        self._schedule(spec.arrival_time, EventKind.FLOW_ARRIVAL, flow=spec.flow, node=spec.source)

    # -- scheduling -------------------------------------------------------

    def _schedule(self, time: int, kind: EventKind, **kw) -> None:
        ev = Event(time=time, seq=next(self._seq), kind=kind, **kw)
        heapq.heappush(self._queue, (ev.time, ev.seq, ev))

    def transit(self, origin: NodeId, port: PortDir, packet) -> None:
        """Schedule delivery of `packet` at the neighbor through `port`, one
        t_hop later, arriving on the neighbor's opposite port."""
        destination = self.mesh.neighbor(origin, port)
        if destination is None:
            raise InvariantViolationError(f"transit from {origin} through {port.name} leaves the mesh")
        self._schedule(
            self.clock + self.config.t_hop,
            EventKind.PACKET_DELIVERY,
            flow=packet.flow,
            node=destination,
            packet=packet,
            arrival_port=port.opposite(),
        )

    # -- main loop --------------------------------------------------------

    def run(self) -> metrics.MetricsReport:
        initial_held = self.network.total_held()
        self.network.drain_dirty()
        truncated = False
        while self._queue:
            if self._queue[0][0] > self.config.max_cycles:
                truncated = True
                break
            _, _, ev = heapq.heappop(self._queue)
            if ev.time < self.clock:
                raise InvariantViolationError(f"event {self._events_processed}: clock would move backward")
            self._advance_clock(ev.time)
            try:
                self._process(ev)
                self._check_dirty_links()
            except InvariantViolationError as exc:
                raise type(exc)(f"event {self._events_processed}: {exc}") from exc
            self._events_processed += 1
            if self._trace is not None:
                self._trace.append(self._trace_line(ev))
        if truncated:
            for rec in self._records.values():
                if rec.phase in (FlowPhase.DISCOVERING, FlowPhase.RESERVING):
                    self._set_phase(rec, FlowPhase.FAILED)
        final_held = self.network.total_held() - initial_held
        expected = sum(
            rec.path_length * self.network.wires_for(rec.spec.required_bandwidth)
            for rec in self._records.values()
            if rec.phase is FlowPhase.ESTABLISHED
        )
        if not truncated and final_held != expected:
            raise InvariantViolationError(
                f"conservation: {final_held} wires still held after drain, expected {expected}"
            )
        return self._build_report(final_held, drained=not truncated)

    def _advance_clock(self, time: int) -> None:
        dt = time - self.clock
        if dt:
            for port in NON_LOCAL_PORTS:
                self._util_acc[port] += self.network.held_by_class[port] * dt
        self.clock = time

    def _check_dirty_links(self) -> None:
        # Only links mutated during this event can have broken the wire
        # invariant; untouched links are unchanged by construction.
        for key in self.network.drain_dirty():
            link = self.network.links[key]
            held = link.held_wires
            if not 0 <= held <= link.wire_count:
                raise InvariantViolationError(
                    f"link {key[0]}->{key[1].name} holds {held} of {link.wire_count} wires"
                )
        for port in NON_LOCAL_PORTS:
            wires = self.network.wires_by_class[port]
            if wires:
                util = self.network.held_by_class[port] / wires
                if util > self._util_peak[port]:
                    self._util_peak[port] = util

    def _process(self, ev: Event) -> None:
        if ev.kind is EventKind.PACKET_DELIVERY:
            packet = ev.packet
            if isinstance(packet, ForwardBee):
                self._on_forward(ev)
            elif isinstance(packet, BackwardBee):
                self._on_backward(ev)
            else:
                self._on_control(ev)
        elif ev.kind is EventKind.FLOW_ARRIVAL:
            self._on_flow_arrival(ev)
        elif ev.kind is EventKind.FLOW_COMPLETE:
            self._on_flow_complete(ev)
        else:
            self._on_setup_timeout(ev)

    # -- event handlers ---------------------------------------------------

    def _on_flow_arrival(self, ev: Event) -> None:
        rec = self._records[ev.flow]
        spec = rec.spec
        timeout = math.ceil(self.config.setup_timeout_factor * rec.hop_limit * self.config.t_hop)
        self._schedule(self.clock + timeout, EventKind.SETUP_TIMEOUT, flow=spec.flow, node=spec.source)
        bee = ForwardBee(
            flow=spec.flow,
            source=spec.source,
            destination=spec.destination,
            hop_counter=0,
            required_bandwidth=spec.required_bandwidth,
            ports=PortList(),
        )
        emissions = router.handle_forward_bee(
            self.nodes[spec.source],
            bee,
            PortDir.LOCAL,
            self.network,
            rec.hop_limit,
            self.config.backward_bee_count,
        )
        for port, packet in emissions:
            self.transit(spec.source, port, packet)

    def _on_forward(self, ev: Event) -> None:
        self._forward_deliveries += 1
        rec = self._records[ev.packet.flow]
        rec.forward_deliveries += 1
        if rec.forward_deliveries > self._forward_cap:
            raise InvariantViolationError(
                f"flow {rec.spec.flow} exceeded the forward-bee event cap ({self._forward_cap})"
            )
        if rec.phase in (FlowPhase.FAILED, FlowPhase.TORN_DOWN):
            return
        emissions = router.handle_forward_bee(
            self.nodes[ev.node],
            ev.packet,
            ev.arrival_port,
            self.network,
            rec.hop_limit,
            self.config.backward_bee_count,
        )
        for port, packet in emissions:
            if isinstance(packet, BackwardBee) and rec.phase is FlowPhase.DISCOVERING:
                self._set_phase(rec, FlowPhase.RESERVING)
            self.transit(ev.node, port, packet)

    def _on_backward(self, ev: Event) -> None:
        self._backward_deliveries += 1
        rec = self._records[ev.packet.flow]
        if rec.phase in (FlowPhase.FAILED, FlowPhase.TORN_DOWN):
            # Flow is already settled; drop the bee and free its prefix.
            emission = router.release_for_backward_bee(ev.packet, ev.arrival_port)
            if emission is not None:
                self.transit(ev.node, emission[0], emission[1])
            return
        outcome = router.handle_backward_bee(self.nodes[ev.node], ev.packet, ev.arrival_port, self.network)
        if outcome.kind == "accepted":
            self._establish(rec, ev.packet)
        for port, packet in outcome.emissions:
            self.transit(ev.node, port, packet)

    def _on_control(self, ev: Event) -> None:
        self._control_deliveries += 1
        emission = router.handle_control(self.nodes[ev.node], ev.packet, ev.arrival_port, self.network)
        if emission is not None:
            self.transit(ev.node, emission[0], emission[1])

    def _establish(self, rec: FlowRecord, bee: BackwardBee) -> None:
        self._set_phase(rec, FlowPhase.ESTABLISHED)
        rec.setup_latency = self.clock - rec.spec.arrival_time
        rec.path_length = bee.route.length
        rec.winner_route = bee.route
        rec.winner_index = bee.bee_index
        self._schedule(
            self.clock + rec.spec.hold_time,
            EventKind.FLOW_COMPLETE,
            flow=rec.spec.flow,
            node=rec.spec.source,
        )

    def _on_flow_complete(self, ev: Event) -> None:
        rec = self._records[ev.flow]
        if rec.phase is not FlowPhase.ESTABLISHED:
            raise InvariantViolationError(f"flow {ev.flow} completed while {rec.phase.value}")
        self._set_phase(rec, FlowPhase.TORN_DOWN)
        teardown = ControlPacket(
            kind=ControlKind.TEARDOWN,
            flow=rec.spec.flow,
            bee_index=rec.winner_index,
            route=rec.winner_route.reverse_complement(),
            next_index=0,
        )
        # The source frees its own hop first, then the packet travels the
        # forward path releasing every circuit link.
        emission = router.handle_control(self.nodes[rec.spec.source], teardown, PortDir.LOCAL, self.network)
        if emission is not None:
            self.transit(rec.spec.source, emission[0], emission[1])

    def _on_setup_timeout(self, ev: Event) -> None:
        rec = self._records[ev.flow]
        if rec.phase in (FlowPhase.DISCOVERING, FlowPhase.RESERVING):
            self._set_phase(rec, FlowPhase.FAILED)

    def _set_phase(self, rec: FlowRecord, phase: FlowPhase) -> None:
        if (rec.phase, phase) not in _LEGAL_TRANSITIONS:
            raise InvariantViolationError(
                f"flow {rec.spec.flow}: illegal phase transition {rec.phase.value} -> {phase.value}"
            )
        rec.phase = phase

    # -- reporting --------------------------------------------------------

    def _trace_line(self, ev: Event) -> str:
        if ev.kind is EventKind.PACKET_DELIVERY:
            packet = ev.packet
            hop = packet.hop_counter if isinstance(packet, ForwardBee) else packet.next_index
            fields = (ev.node, packet.flow, _packet_kind(packet), ev.arrival_port.name.lower(), hop)
        else:
            fields = (ev.node, ev.flow, "-", "-", "-")
        node, flow, pkt, port, hop = fields
        return f"{self.clock}\t{ev.kind.value}\t{node}\t{flow}\t{pkt}\t{port}\t{hop}"

    def _build_report(self, final_held: int, drained: bool) -> metrics.MetricsReport:
        rows = []
        for rec in self._records.values():
            spec = rec.spec
            rows.append(
                metrics.FlowRow(
                    flow_seq=spec.flow.sequence,
                    src_x=spec.source.x,
                    src_y=spec.source.y,
                    dst_x=spec.destination.x,
                    dst_y=spec.destination.y,
                    bandwidth=spec.required_bandwidth,
                    phase=rec.phase.value,
                    setup_latency=rec.setup_latency,
                    path_length=rec.path_length,
                    manhattan=self.mesh.manhattan(spec.source, spec.destination),
                    ever_established=rec.ever_established,
                )
            )
        stats = metrics.RunStats(
            events_processed=self._events_processed,
            forward_deliveries=self._forward_deliveries,
            backward_deliveries=self._backward_deliveries,
            control_deliveries=self._control_deliveries,
            max_forward_deliveries_per_flow=max(
                (rec.forward_deliveries for rec in self._records.values()), default=0
            ),
            final_wires_held=final_held,
            drained=drained,
            final_cycle=self.clock,
        )
        util_mean = {}
        for port in NON_LOCAL_PORTS:
            denom = self.network.wires_by_class[port] * self.clock
            util_mean[port] = (self._util_acc[port] / denom) if denom else 0.0
        trace = tuple(self._trace) if self._trace is not None else None
        return metrics.build_report(self.config, tuple(rows), stats, dict(self._util_peak), util_mean, trace)


# -- workload I/O ---------------------------------------------------------

def parse_workload(text: str, mesh: Mesh) -> list[FlowSpec]:
    """Parse the workload file format: one flow per line,
    src_x,src_y,dst_x,dst_y,bandwidth,arrival_cycle,hold_cycles.
    Blank lines and '#' comments are allowed."""
    flows: list[FlowSpec] = []
    counters: dict[NodeId, int] = defaultdict(int)
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = [p.strip() for p in stripped.split(",")]
        if len(parts) != 7:
            raise ConfigError(f"workload line {lineno}: expected 7 comma-separated fields, got {len(parts)}")
        try:
            src = NodeId(int(parts[0]), int(parts[1]))
            dst = NodeId(int(parts[2]), int(parts[3]))
            bandwidth = float(parts[4])
            arrival = int(parts[5])
            hold = int(parts[6])
        except ValueError as exc:
            raise ConfigError(f"workload line {lineno}: {exc}") from None
        for node in (src, dst):
            if not mesh.contains(node):
                raise ConfigError(f"workload line {lineno}: node {node} is outside the mesh")
        flow = FlowId(src, counters[src])
        counters[src] += 1
        try:
            flows.append(FlowSpec(flow, src, dst, bandwidth, arrival, hold))
        except (DegenerateFlowError, ValueError) as exc:
            raise ConfigError(f"workload line {lineno}: {exc}") from None
    return flows


def load_workload(path, mesh: Mesh) -> list[FlowSpec]:
    return parse_workload(Path(path).read_text(encoding="ascii"), mesh)


def run_simulation(config: RunConfig, workload: Sequence[FlowSpec] | None = None) -> metrics.MetricsReport:
    """Build the workload (explicit file or generated traffic), run one
    simulation, and return its report. Deterministic in (config, seed)."""
    mesh = Mesh(config.mesh_width, config.mesh_height)
    if workload is None:
        if config.workload_file is not None:
            workload = load_workload(config.workload_file, mesh)
        else:
            from .traffic import generate_traffic, make_rng, traffic_params_from_config

            workload = generate_traffic(mesh, traffic_params_from_config(config), make_rng(config.seed))
    return Simulator(config, workload).run()
