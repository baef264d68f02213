import logging

import pytest

from beenoc import (
    BackwardBee,
    ControlKind,
    ControlPacket,
    FlowId,
    ForwardBee,
    Mesh,
    Network,
    NodeId,
    NodeState,
    PortDir,
    PortList,
    ProtocolCorruptionError,
    handle_backward_bee,
    handle_control,
    handle_forward_bee,
)

S, W, E, N, LOCAL = PortDir.SOUTH, PortDir.WEST, PortDir.EAST, PortDir.NORTH, PortDir.LOCAL


def make_net(width=3, height=3, wire_count=8, wire_bandwidth=1.0):
    mesh = Mesh(width, height)
    net = Network(mesh, wire_count, wire_bandwidth)
    states = {n: NodeState(n) for n in mesh.nodes()}
    return mesh, net, states


def make_bee(flow, src, dst, ports=(), bandwidth=1.0):
    lst = PortList.from_ports(ports)
    return ForwardBee(flow, src, dst, lst.length, bandwidth, lst)


def deliver_backward_until_done(mesh, net, states, dest, bee):
    """Walk a backward bee hop by hop from its birth at `dest`; returns the
    final (node, outcome)."""
    port = bee.route.entry(0)
    node = mesh.neighbor(dest, port)
    arrival = port.opposite()
    while True:
        outcome = handle_backward_bee(states[node], bee, arrival, net)
        if outcome.kind != "forwarded":
            return node, outcome
        port, bee = outcome.emissions[0]
        node = mesh.neighbor(node, port)
        arrival = port.opposite()


def deliver_control_chain(mesh, net, states, origin, emission):
    """Deliver a control packet emitted at `origin` until its route runs out."""
    port, pkt = emission
    node = mesh.neighbor(origin, port)
    arrival = port.opposite()
    while True:
        forwarded = handle_control(states[node], pkt, arrival, net)
        if forwarded is None:
            return
        port, pkt = forwarded
        node = mesh.neighbor(node, port)
        arrival = port.opposite()


class TestForwardBee:
    def test_duplicate_killed_at_intermediate(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 0)
        first = make_bee(flow, NodeId(0, 0), NodeId(2, 2), [E])
        assert handle_forward_bee(states[NodeId(1, 0)], first, W, net, hop_limit=8)
        second = make_bee(flow, NodeId(0, 0), NodeId(2, 2), [N, E, S])
        assert handle_forward_bee(states[NodeId(1, 0)], second, N, net, hop_limit=8) == []

    def test_killed_at_hop_limit(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 1)
        bee = make_bee(flow, NodeId(0, 0), NodeId(2, 2), [E, N, E, N])
        assert handle_forward_bee(states[NodeId(1, 1)], bee, W, net, hop_limit=4) == []

    def test_broadcast_excludes_arrival_port(self):
        # center of an idle 3x3, bee arrived from the west: east, north and
        # south are open, the bee never turns back west
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 2)
        bee = make_bee(flow, NodeId(0, 0), NodeId(2, 2), [E])
        emissions = handle_forward_bee(states[NodeId(1, 1)], bee, W, net, hop_limit=8)
        assert {port for port, _ in emissions} == {S, E, N}
        for port, out in emissions:
            assert out.hop_counter == 2
            assert list(out.ports) == [E, port]

    def test_broadcast_respects_residual(self):
        mesh, net, states = make_net(wire_count=4)
        flow = FlowId(NodeId(0, 0), 3)
        net.reserve(NodeId(1, 1), E, ("bg", 0), 4.0)  # saturate the east link
        bee = make_bee(flow, NodeId(0, 0), NodeId(2, 2), [E])
        emissions = handle_forward_bee(states[NodeId(1, 1)], bee, W, net, hop_limit=8)
        assert {port for port, _ in emissions} == {S, N}

    def test_source_injection_broadcasts_everywhere(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(1, 1), 0)
        bee = make_bee(flow, NodeId(1, 1), NodeId(2, 2))
        emissions = handle_forward_bee(states[NodeId(1, 1)], bee, LOCAL, net, hop_limit=6)
        assert {port for port, _ in emissions} == {S, W, E, N}
        assert all(out.hop_counter == 1 and out.ports.length == 1 for _, out in emissions)
        assert flow in states[NodeId(1, 1)].seen

    def test_corner_source_two_ports(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 1)
        bee = make_bee(flow, NodeId(0, 0), NodeId(2, 2))
        emissions = handle_forward_bee(states[NodeId(0, 0)], bee, LOCAL, net, hop_limit=6)
        assert {port for port, _ in emissions} == {E, N}

    def test_destination_converts_first_three(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 4)
        dest = NodeId(2, 2)
        paths = [[E, E, N, N], [N, N, E, E], [E, N, E, N], [N, E, N, E], [E, N, N, E]]
        backward = []
        for i, path in enumerate(paths):
            bee = make_bee(flow, NodeId(0, 0), dest, path)
            emissions = handle_forward_bee(states[dest], bee, path[-1].opposite(), net, hop_limit=9)
            if i < 3:
                assert len(emissions) == 1
                port, back = emissions[0]
                assert isinstance(back, BackwardBee)
                assert back.bee_index == i
                assert back.route == PortList.from_ports(path).reverse_complement()
                assert port is back.route.entry(0)
                assert back.next_index == 1 and back.reserved_prefix == 0
                backward.append(back)
            else:
                assert emissions == []
        assert states[dest].dest_arrivals[flow] == 3
        assert len(backward) == 3

    def test_destination_cap_one(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 5)
        dest = NodeId(2, 2)
        first = make_bee(flow, NodeId(0, 0), dest, [E, E, N, N])
        second = make_bee(flow, NodeId(0, 0), dest, [N, N, E, E])
        assert len(handle_forward_bee(states[dest], first, S, net, hop_limit=9, convert_cap=1)) == 1
        assert handle_forward_bee(states[dest], second, W, net, hop_limit=9, convert_cap=1) == []

    def test_forward_bees_never_touch_links(self):
        # flood a whole flow over the mesh: discovery must leave every
        # reservation pool untouched
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 6)
        before = net.residual_snapshot()
        queue = [(NodeId(0, 0), make_bee(flow, NodeId(0, 0), NodeId(2, 2)), LOCAL)]
        deliveries = 0
        while queue:
            node, bee, arrival = queue.pop(0)
            deliveries += 1
            for port, packet in handle_forward_bee(states[node], bee, arrival, net, hop_limit=6):
                if isinstance(packet, ForwardBee):
                    queue.append((mesh.neighbor(node, port), packet, port.opposite()))
        assert deliveries > 1
        assert net.total_held() == 0
        assert net.residual_snapshot() == before

    def test_malformed_bee_aborts(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 7)
        bee = ForwardBee(flow, NodeId(0, 0), NodeId(2, 2), 3, 1.0, PortList.from_ports([E]))
        with pytest.raises(ProtocolCorruptionError):
            handle_forward_bee(states[NodeId(1, 0)], bee, W, net, hop_limit=6)


class TestBackwardBee:
    def test_single_hop_accepted(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 0)
        route = PortList.from_ports([E]).reverse_complement()  # forward east -> route west
        bee = BackwardBee(flow, 0, route, 1, 2.5, 0)
        node, outcome = deliver_backward_until_done(mesh, net, states, NodeId(1, 0), bee)
        assert node == NodeId(0, 0)
        assert outcome.kind == "accepted"
        # the source holds the data-direction first hop: 3 wires of 8
        assert net.residual(NodeId(0, 0), E) == 5.0
        entry = states[NodeId(0, 0)].flow_table[(flow, 0)]
        assert entry.in_port is E and entry.out_port is LOCAL and entry.wires_held == 3
        assert flow in states[NodeId(0, 0)].source_accepted

    def test_multi_hop_reserves_data_path(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 1)
        forward = PortList.from_ports([E, N])
        bee = BackwardBee(flow, 0, forward.reverse_complement(), 1, 1.0, 0)
        node, outcome = deliver_backward_until_done(mesh, net, states, NodeId(1, 1), bee)
        assert outcome.kind == "accepted"
        # exactly the links a source->destination walk would use
        assert net.link(NodeId(0, 0), E).reservations == {(flow, 0): 1}
        assert net.link(NodeId(1, 0), N).reservations == {(flow, 0): 1}
        assert net.total_held() == 2

    def test_reservation_failure_releases_prefix(self):
        mesh, net, states = make_net(wire_count=4)
        flow = FlowId(NodeId(0, 0), 2)
        forward = PortList.from_ports([E, E])
        net.reserve(NodeId(0, 0), E, ("bg", 0), 4.0)  # the final reservation will fail
        bee = BackwardBee(flow, 0, forward.reverse_complement(), 1, 2.0, 0)
        node, outcome = deliver_backward_until_done(mesh, net, states, NodeId(2, 0), bee)
        assert node == NodeId(0, 0)
        assert outcome.kind == "aborted"
        assert len(outcome.emissions) == 1
        deliver_control_chain(mesh, net, states, node, outcome.emissions[0])
        # only the background reservation survives
        assert net.total_held() == 4
        assert net.link(NodeId(1, 0), E).reservations == {}
        assert all((flow, 0) not in st.flow_table for st in states.values())

    def test_failure_with_empty_prefix_emits_nothing(self):
        mesh, net, states = make_net(wire_count=4)
        flow = FlowId(NodeId(0, 0), 3)
        net.reserve(NodeId(1, 0), E, ("bg", 0), 4.0)
        bee = BackwardBee(flow, 0, PortList.from_ports([E, E]).reverse_complement(), 1, 2.0, 0)
        outcome = handle_backward_bee(states[NodeId(1, 0)], bee, E, net)
        assert outcome.kind == "aborted"
        assert outcome.emissions == []
        assert net.total_held() == 4

    def test_losing_sibling_releases_only_its_own_wires(self):
        # two sibling bees whose routes share the 1,0 -> 2,0 data link; the
        # loser's release must leave the winner's wires in place
        mesh, net, states = make_net(width=4, height=2, wire_count=4)
        flow = FlowId(NodeId(0, 0), 0)
        route1 = PortList.from_ports([E, E, E, N]).reverse_complement()  # S W W W
        route2 = PortList.from_ports([E, E, N, E]).reverse_complement()  # W S W W
        bee1 = BackwardBee(flow, 0, route1, 1, 2.0, 0)
        bee2 = BackwardBee(flow, 1, route2, 1, 2.0, 0)
        _, first = deliver_backward_until_done(mesh, net, states, NodeId(3, 1), bee1)
        assert first.kind == "accepted"
        shared = net.link(NodeId(1, 0), E)
        node, second = deliver_backward_until_done(mesh, net, states, NodeId(3, 1), bee2)
        assert second.kind == "aborted"
        assert shared.reservations == {(flow, 0): 2, (flow, 1): 2}  # both held pre-release
        deliver_control_chain(mesh, net, states, node, second.emissions[0])
        assert shared.reservations == {(flow, 0): 2}
        # the winner's four-link circuit is intact, nothing else is held
        assert net.total_held() == 8
        for spot, port in [(NodeId(0, 0), E), (NodeId(1, 0), E), (NodeId(2, 0), E), (NodeId(3, 0), N)]:
            assert net.link(spot, port).reservations == {(flow, 0): 2}

    def test_corrupt_index_rejected(self):
        mesh, net, states = make_net()
        bee = BackwardBee(FlowId(NodeId(0, 0), 4), 0, PortList.from_ports([W]), 5, 1.0, 4)
        with pytest.raises(ProtocolCorruptionError):
            handle_backward_bee(states[NodeId(0, 0)], bee, E, net)


class TestControl:
    def build_circuit(self, mesh, net, states, flow, forward_ports, bandwidth=1.0):
        forward = PortList.from_ports(forward_ports)
        dest = NodeId(0, 0)
        for port in forward:
            dest = mesh.neighbor(dest, port)
        bee = BackwardBee(flow, 0, forward.reverse_complement(), 1, bandwidth, 0)
        node, outcome = deliver_backward_until_done(mesh, net, states, dest, bee)
        assert outcome.kind == "accepted"
        return forward

    def test_teardown_restores_three_hop_circuit(self):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 0)
        forward = self.build_circuit(mesh, net, states, flow, [E, E, N], bandwidth=2.0)
        assert net.total_held() == 6
        teardown = ControlPacket(ControlKind.TEARDOWN, flow, 0, forward, 0)
        emission = handle_control(states[NodeId(0, 0)], teardown, LOCAL, net)
        deliver_control_chain(mesh, net, states, NodeId(0, 0), emission)
        assert net.total_held() == 0
        assert all(not st.flow_table for st in states.values())

    def test_zero_length_release_is_noop(self):
        mesh, net, states = make_net()
        pkt = ControlPacket(ControlKind.RELEASE, FlowId(NodeId(0, 0), 1), 0, PortList(), 0)
        before = net.residual_snapshot()
        assert handle_control(states[NodeId(1, 1)], pkt, E, net) is None
        assert net.residual_snapshot() == before

    def test_double_teardown_warns_but_survives(self, caplog):
        mesh, net, states = make_net()
        flow = FlowId(NodeId(0, 0), 2)
        forward = self.build_circuit(mesh, net, states, flow, [E, N])
        for round_no in range(2):
            teardown = ControlPacket(ControlKind.TEARDOWN, flow, 0, forward, 0)
            with caplog.at_level(logging.WARNING, logger="beenoc.router"):
                emission = handle_control(states[NodeId(0, 0)], teardown, LOCAL, net)
                deliver_control_chain(mesh, net, states, NodeId(0, 0), emission)
            if round_no == 1:
                assert any("no reservation" in rec.message for rec in caplog.records)
        assert net.total_held() == 0
