"""2D mesh geometry: node coordinates, port directions, and directed links
with spatial-division-multiplexed wire pools."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .errors import (
    DegenerateFlowError,
    InvalidPathError,
    InvalidPortError,
    InvariantViolationError,
)


class PortDir(Enum):
    """Router ports of a mesh node.

    Non-local ports carry a 2-bit wire code (south 00, west 01, east 10,
    north 11) chosen so that complementing both bits yields the code of the
    opposite port. The local port has no code and never appears in a route.
    """

    SOUTH = 0b00
    WEST = 0b01
    EAST = 0b10
    NORTH = 0b11
    LOCAL = 4

    @property
    def code(self) -> int:
        if self is PortDir.LOCAL:
            raise InvalidPortError("the local port has no wire code")
        return self.value

    def opposite(self) -> "PortDir":
        if self is PortDir.LOCAL:
            raise InvalidPortError("the local port has no opposite")
        return PortDir(self.value ^ 0b11)

    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]


# Axis convention: east increases x, north increases y.
_DELTAS = {
    PortDir.SOUTH: (0, -1),
    PortDir.WEST: (-1, 0),
    PortDir.EAST: (1, 0),
    PortDir.NORTH: (0, 1),
    PortDir.LOCAL: (0, 0),
}

# Canonical iteration order for broadcasts and enumeration: by wire code.
NON_LOCAL_PORTS = (PortDir.SOUTH, PortDir.WEST, PortDir.EAST, PortDir.NORTH)


@dataclass(frozen=True, slots=True)
class NodeId:
    """Grid coordinates of a mesh node (x: column, y: row, both 0-based)."""

    x: int
    y: int

    def step(self, port: PortDir) -> "NodeId":
        dx, dy = port.delta()
        return NodeId(self.x + dx, self.y + dy)

    def __str__(self) -> str:
        return f"{self.x},{self.y}"


@dataclass(frozen=True, slots=True)
class Mesh:
    """A width x height 2D mesh."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("mesh dimensions must be positive")

    def contains(self, node: NodeId) -> bool:
        return 0 <= node.x < self.width and 0 <= node.y < self.height

    def nodes(self) -> Iterator[NodeId]:
        """All nodes in row-major order (y outer, x inner)."""
        for y in range(self.height):
            for x in range(self.width):
                yield NodeId(x, y)

    @property
    def node_count(self) -> int:
        return self.width * self.height

    def neighbor(self, node: NodeId, port: PortDir) -> NodeId | None:
        """Adjacent node in direction `port`, or None at the mesh boundary."""
        if port is PortDir.LOCAL:
            raise InvalidPortError("neighbor lookup needs a non-local port")
        if not self.contains(node):
            raise InvalidPathError(f"node {node} is outside the {self.width}x{self.height} mesh")
        nxt = node.step(port)
        return nxt if self.contains(nxt) else None

    def manhattan(self, a: NodeId, b: NodeId) -> int:
        return abs(a.x - b.x) + abs(a.y - b.y)

    def hop_limit(self, src: NodeId, dst: NodeId, metric: str = "euclidean") -> int:
        """Forward-bee hop budget: twice the src-dst distance, rounded up.

        The default metric is euclidean; hop counts are integral so the
        budget is the ceiling. `manhattan` is available as an alternative.
        """
        if src == dst:
            raise DegenerateFlowError(f"flow {src} -> {dst} needs no circuit")
        dx = dst.x - src.x
        dy = dst.y - src.y
        if metric == "euclidean":
            return math.ceil(2.0 * math.sqrt(dx * dx + dy * dy))
        if metric == "manhattan":
            return 2 * (abs(dx) + abs(dy))
        raise ValueError(f"unknown hop-limit metric {metric!r}")


@dataclass(slots=True)
class LinkState:
    """One directed link: a pool of identical wires plus per-owner reservations.

    `reservations` maps (flow, bee index) to the wires that owner holds.
    The sum of held wires never exceeds wire_count.
    """

    node: NodeId
    direction: PortDir
    wire_count: int
    wire_bandwidth: float
    reservations: dict = field(default_factory=dict)

    @property
    def held_wires(self) -> int:
        return sum(self.reservations.values())

    @property
    def free_wires(self) -> int:
        return self.wire_count - self.held_wires

    @property
    def residual_bandwidth(self) -> float:
        return self.free_wires * self.wire_bandwidth


class Network:
    """Mesh plus one LinkState per directed link, with reservation accounting.

    Each physical channel between neighbors is modeled as two independent
    directed links, each with its own wire pool. All mutation goes through
    reserve()/release() so that per-direction totals and the wire-count
    invariant are maintained in one place.
    """

    def __init__(self, mesh: Mesh, wire_count: int, wire_bandwidth: float) -> None:
        if wire_count < 1:
            raise ValueError("wire_count must be >= 1")
        if wire_bandwidth <= 0.0:
            raise ValueError("wire_bandwidth must be positive")
        self.mesh = mesh
        self.wire_count = wire_count
        self.wire_bandwidth = wire_bandwidth
        self.links: dict[tuple[NodeId, PortDir], LinkState] = {}
        for node in mesh.nodes():
            for port in NON_LOCAL_PORTS:
                if mesh.neighbor(node, port) is not None:
                    self.links[(node, port)] = LinkState(node, port, wire_count, wire_bandwidth)
        self.held_by_class: dict[PortDir, int] = {p: 0 for p in NON_LOCAL_PORTS}
        self.wires_by_class: dict[PortDir, int] = {p: 0 for p in NON_LOCAL_PORTS}
        for (_, port) in self.links:
            self.wires_by_class[port] += wire_count
        self._dirty: set[tuple[NodeId, PortDir]] = set()

    def link(self, node: NodeId, port: PortDir) -> LinkState:
        try:
            return self.links[(node, port)]
        except KeyError:
            raise InvalidPathError(f"no link leaving {node} toward {port.name}") from None

    def residual(self, node: NodeId, port: PortDir) -> float:
        return self.link(node, port).residual_bandwidth

    def wires_for(self, bandwidth: float) -> int:
        """Wires needed to carry `bandwidth`: ceil(bandwidth / wire_bandwidth).

        A tiny slack absorbs binary-float artifacts in the quotient so that
        e.g. 0.3 / 0.15 still needs exactly 2 wires.
        """
        if bandwidth <= 0.0:
            raise ValueError("bandwidth must be positive")
        return max(1, math.ceil(bandwidth / self.wire_bandwidth - 1e-9))

    def reserve(self, node: NodeId, port: PortDir, key, bandwidth: float) -> bool:
        """Try to reserve wires for `key` on the link leaving `node` via `port`.

        Returns False (link unchanged) when the residual is insufficient.
        """
        link = self.link(node, port)
        need = self.wires_for(bandwidth)
        if link.free_wires < need:
            return False
        if key in link.reservations:
            raise InvariantViolationError(f"duplicate reservation by {key} on {node}->{port.name}")
        link.reservations[key] = need
        self.held_by_class[port] += need
        self._dirty.add((node, port))
        if link.held_wires > link.wire_count:
            raise InvariantViolationError(f"wire over-subscription on {node}->{port.name}")
        return True

    def release(self, node: NodeId, port: PortDir, key) -> int:
        """Free `key`'s wires on the given link; returns the wires freed (0 if none)."""
        link = self.link(node, port)
        wires = link.reservations.pop(key, 0)
        self.held_by_class[port] -= wires
        self._dirty.add((node, port))
        return wires

    def total_held(self) -> int:
        return sum(self.held_by_class.values())

    def drain_dirty(self) -> set[tuple[NodeId, PortDir]]:
        """Links touched since the last call; used for per-event invariant checks."""
        dirty = self._dirty
        self._dirty = set()
        return dirty

    def residual_snapshot(self) -> dict[tuple[NodeId, PortDir], float]:
        """Frozen residual bandwidth of every directed link."""
        return {k: ls.residual_bandwidth for k, ls in self.links.items()}
