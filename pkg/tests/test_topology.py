import pytest

from beenoc import (
    DegenerateFlowError,
    InvalidPortError,
    InvariantViolationError,
    LinkState,
    Mesh,
    Network,
    NodeId,
    PortDir,
)
from beenoc.topology import NON_LOCAL_PORTS


class TestNeighbor:
    def test_east_from_origin(self):
        mesh = Mesh(4, 4)
        assert mesh.neighbor(NodeId(0, 0), PortDir.EAST) == NodeId(1, 0)

    def test_west_off_mesh(self):
        mesh = Mesh(4, 4)
        assert mesh.neighbor(NodeId(0, 0), PortDir.WEST) is None

    def test_north_off_mesh_at_top(self):
        mesh = Mesh(4, 4)
        assert mesh.neighbor(NodeId(3, 3), PortDir.NORTH) is None

    def test_axis_convention(self):
        mesh = Mesh(3, 3)
        assert mesh.neighbor(NodeId(1, 1), PortDir.NORTH) == NodeId(1, 2)
        assert mesh.neighbor(NodeId(1, 1), PortDir.SOUTH) == NodeId(1, 0)
        assert mesh.neighbor(NodeId(1, 1), PortDir.EAST) == NodeId(2, 1)
        assert mesh.neighbor(NodeId(1, 1), PortDir.WEST) == NodeId(0, 1)

    def test_local_rejected(self):
        mesh = Mesh(4, 4)
        with pytest.raises(InvalidPortError):
            mesh.neighbor(NodeId(0, 0), PortDir.LOCAL)

    def test_round_trip_everywhere(self):
        # neighbor(neighbor(n, d), opposite(d)) == n whenever both exist
        mesh = Mesh(5, 3)
        for node in mesh.nodes():
            for port in NON_LOCAL_PORTS:
                nxt = mesh.neighbor(node, port)
                if nxt is not None:
                    assert mesh.neighbor(nxt, port.opposite()) == node


class TestPorts:
    def test_opposites(self):
        assert PortDir.SOUTH.opposite() is PortDir.NORTH
        assert PortDir.NORTH.opposite() is PortDir.SOUTH
        assert PortDir.WEST.opposite() is PortDir.EAST
        assert PortDir.EAST.opposite() is PortDir.WEST

    def test_local_has_no_opposite(self):
        with pytest.raises(InvalidPortError):
            PortDir.LOCAL.opposite()


class TestHopLimit:
    @pytest.mark.parametrize(
        "src,dst,expected",
        [
            (NodeId(0, 0), NodeId(3, 4), 10),  # 2 * 5 exactly
            (NodeId(0, 0), NodeId(1, 0), 2),
            (NodeId(0, 0), NodeId(1, 1), 3),  # ceil(2 * sqrt(2))
        ],
    )
    def test_euclidean(self, src, dst, expected):
        assert Mesh(8, 8).hop_limit(src, dst) == expected

    def test_manhattan_metric(self):
        assert Mesh(8, 8).hop_limit(NodeId(0, 0), NodeId(1, 1), metric="manhattan") == 4

    def test_degenerate(self):
        with pytest.raises(DegenerateFlowError):
            Mesh(4, 4).hop_limit(NodeId(2, 2), NodeId(2, 2))

    def test_at_least_manhattan(self):
        mesh = Mesh(6, 6)
        for src in mesh.nodes():
            for dst in mesh.nodes():
                if src != dst:
                    assert mesh.hop_limit(src, dst) >= mesh.manhattan(src, dst)


class TestResidualBandwidth:
    def test_partial(self):
        link = LinkState(NodeId(0, 0), PortDir.EAST, 8, 1.0, {("f1", 0): 3})
        assert link.residual_bandwidth == 5.0

    def test_empty(self):
        link = LinkState(NodeId(0, 0), PortDir.EAST, 8, 1.0)
        assert link.residual_bandwidth == 8.0

    def test_saturated(self):
        link = LinkState(NodeId(0, 0), PortDir.EAST, 4, 0.5, {("f1", 0): 4})
        assert link.residual_bandwidth == 0.0


class TestNetworkReservations:
    def test_reserve_monotone(self):
        net = Network(Mesh(3, 3), 8, 1.0)
        node, port = NodeId(1, 1), PortDir.EAST
        last = net.residual(node, port)
        for i in range(4):
            assert net.reserve(node, port, ("f", i), 2.0)
            assert net.residual(node, port) <= last
            last = net.residual(node, port)
        assert last == 0.0
        for i in range(4):
            before = net.residual(node, port)
            assert net.release(node, port, ("f", i)) == 2
            assert net.residual(node, port) >= before
        assert net.residual(node, port) == 8.0

    def test_insufficient_wires_leave_link_unchanged(self):
        # 8 wires, 6 already held: a 2.5-unit demand needs 3 wires and fails
        net = Network(Mesh(3, 3), 8, 1.0)
        node, port = NodeId(0, 0), PortDir.EAST
        assert net.reserve(node, port, ("bg", 0), 6.0)
        before = dict(net.link(node, port).reservations)
        assert not net.reserve(node, port, ("f", 0), 2.5)
        assert net.link(node, port).reservations == before
        assert net.residual(node, port) == 2.0

    def test_exact_fit_single_wire(self):
        net = Network(Mesh(3, 3), 8, 1.0)
        assert net.reserve(NodeId(1, 1), PortDir.NORTH, ("f", 0), 1.0)
        assert net.link(NodeId(1, 1), PortDir.NORTH).reservations == {("f", 0): 1}

    def test_duplicate_key_rejected(self):
        net = Network(Mesh(3, 3), 8, 1.0)
        assert net.reserve(NodeId(0, 0), PortDir.EAST, ("f", 0), 1.0)
        with pytest.raises(InvariantViolationError):
            net.reserve(NodeId(0, 0), PortDir.EAST, ("f", 0), 1.0)

    def test_release_absent_returns_zero(self):
        net = Network(Mesh(3, 3), 8, 1.0)
        assert net.release(NodeId(0, 0), PortDir.EAST, ("ghost", 0)) == 0

    def test_link_population(self):
        # 2 * (w-1) * h horizontal plus 2 * w * (h-1) vertical directed links
        net = Network(Mesh(4, 3), 8, 1.0)
        assert len(net.links) == 2 * 3 * 3 + 2 * 4 * 2

    def test_wires_for_rounding(self):
        net = Network(Mesh(2, 2), 8, 1.0)
        assert net.wires_for(2.5) == 3
        assert net.wires_for(1.0) == 1
        net_half = Network(Mesh(2, 2), 8, 0.5)
        assert net_half.wires_for(0.5) == 1
        assert net_half.wires_for(0.75) == 2
        # binary-float quotient artifacts must not add a phantom wire
        net_q = Network(Mesh(2, 2), 8, 0.15)
        assert net_q.wires_for(0.3) == 2
