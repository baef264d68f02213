"""Brute-force feasibility ground truth for small meshes.

Exhaustively enumerates the simple paths between two nodes that stay within
a hop budget and whose every directed link has enough residual bandwidth,
evaluated against a frozen snapshot. Used to validate protocol soundness and
idle-network optimality; the live protocol races against time, so equivalence
claims are restricted to single-flow or frozen-background scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .engine import FlowSpec, Simulator
from .errors import DegenerateFlowError, OracleSizeError
from .protocol import FlowId, PortList
from .topology import NON_LOCAL_PORTS, Mesh, NodeId, PortDir


@dataclass(frozen=True, slots=True)
class FeasibleSet:
    """All simple src->dst paths within the bound that meet the bandwidth
    constraint on every link, in lexicographic port-code order."""

    paths: tuple[PortList, ...]

    def __len__(self) -> int:
        return len(self.paths)

    def __contains__(self, path: PortList) -> bool:
        return path in self.paths

    def min_length(self) -> int | None:
        return min((p.length for p in self.paths), default=None)


def enumerate_feasible(
    residuals: dict[tuple[NodeId, PortDir], float],
    mesh: Mesh,
    src: NodeId,
    dst: NodeId,
    required_bandwidth: float,
    bound: int,
) -> FeasibleSet:
    """Exhaustive feasibility check over simple paths of length <= bound.

    Tractability guard: accepts meshes up to 5x5, or any mesh when the bound
    is at most 12; anything larger is refused.
    """
    if src == dst:
        raise DegenerateFlowError("feasibility enumeration needs distinct endpoints")
    small_mesh = mesh.width <= 5 and mesh.height <= 5
    if not small_mesh and bound > 12:
        raise OracleSizeError(
            f"refusing exhaustive enumeration: mesh {mesh.width}x{mesh.height} exceeds 5x5 "
            f"and bound {bound} exceeds 12"
        )
    paths: list[PortList] = []
    visited = {src}

    def explore(current: NodeId, path: PortList) -> None:
        if current == dst:
            paths.append(path)
            return
        if path.length == bound:
            return
        for port in NON_LOCAL_PORTS:  # code order makes the output lexicographic
            nxt = mesh.neighbor(current, port)
            if nxt is None or nxt in visited:
                continue
            if residuals[(current, port)] < required_bandwidth:
                continue
            visited.add(nxt)
            explore(nxt, path.push(port))
            visited.discard(nxt)

    explore(src, PortList())
    return FeasibleSet(tuple(paths))


# -- randomized single-flow soundness scenarios ----------------------------

@dataclass(frozen=True, slots=True)
class ScenarioOutcome:
    """Result of one single-flow run compared against the exhaustive check."""

    source: NodeId
    destination: NodeId
    required_bandwidth: float
    idle: bool
    established: bool
    path_length: int | None
    forward_path: PortList | None
    feasible_count: int
    min_feasible_length: int | None
    path_in_feasible: bool | None
    manhattan: int


def single_flow_scenario(
    cfg: RunConfig,
    rng: np.random.Generator,
    saturate: bool,
) -> ScenarioOutcome:
    """Run one randomized single-flow setup race against the oracle.

    With `saturate` a random subset of directed links is pre-loaded with
    background reservations; the oracle evaluates the pre-setup snapshot.
    """
    mesh = Mesh(cfg.mesh_width, cfg.mesh_height)
    nodes = list(mesh.nodes())
    src = nodes[int(rng.integers(0, len(nodes)))]
    dst = src
    while dst == src:
        dst = nodes[int(rng.integers(0, len(nodes)))]
    # Between one wire's worth and slightly more than a full link, so idle
    # scenarios mix feasible and infeasible demands.
    wires_wanted = int(rng.integers(1, cfg.wire_count + 2))
    bandwidth = wires_wanted * cfg.wire_bandwidth
    flow = FlowId(src, 0)
    spec = FlowSpec(flow, src, dst, bandwidth, arrival_time=0, hold_time=5)
    sim = Simulator(cfg, [spec])
    if saturate:
        for index, (node, port) in enumerate(sorted(sim.network.links, key=lambda k: (k[0].y, k[0].x, k[1].value))):
            if rng.random() < 0.35:
                held = int(rng.integers(1, cfg.wire_count + 1))
                background = (FlowId(NodeId(0, 0), -(index + 1)), 0)
                sim.network.link(node, port).reservations[background] = held
                sim.network.held_by_class[port] += held
    snapshot = sim.network.residual_snapshot()
    hop_limit = mesh.hop_limit(src, dst, cfg.hop_limit_metric)
    sim.run()
    record = sim._records[flow]
    established = record.winner_route is not None
    forward_path = record.winner_route.reverse_complement() if established else None
    feasible = enumerate_feasible(snapshot, mesh, src, dst, bandwidth, hop_limit)
    return ScenarioOutcome(
        source=src,
        destination=dst,
        required_bandwidth=bandwidth,
        idle=not saturate,
        established=established,
        path_length=record.path_length,
        forward_path=forward_path,
        feasible_count=len(feasible),
        min_feasible_length=feasible.min_length(),
        path_in_feasible=(forward_path in feasible) if established else None,
        manhattan=mesh.manhattan(src, dst),
    )


def soundness_violation(outcome: ScenarioOutcome) -> str | None:
    """Explain how `outcome` breaks the oracle contract, or None if sound.

    Every established circuit must be a member of the pre-setup feasible
    set; on an idle mesh a failed setup must coincide with an empty set and
    an established path must be a shortest member.
    """
    if outcome.established:
        if not outcome.path_in_feasible:
            return "established circuit is not in the feasible set"
        if outcome.idle and outcome.path_length != outcome.min_feasible_length:
            return "established path is longer than the shortest feasible path on an idle mesh"
    else:
        if outcome.idle and outcome.feasible_count > 0:
            return "setup failed on an idle mesh although feasible paths exist"
    return None
