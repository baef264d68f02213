"""Protocol messages and the bit-packed port-list route codec.

A route is recorded as a sequence of 2-bit output-port codes instead of node
addresses, so its size is independent of the mesh's address width. Reversing
the entry order and complementing both bits of every entry turns a discovered
path into the route that retraces it from the far end.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

from .errors import InvalidPathError, InvalidPortError, PortListOverflowError
from .topology import Mesh, NodeId, PortDir


def encode_port(port: PortDir) -> int:
    """2-bit wire code of a non-local port (south 00, west 01, east 10, north 11)."""
    return port.code


def decode_port(code: int) -> PortDir:
    if not 0 <= code <= 3:
        raise InvalidPortError(f"port code {code} is not a 2-bit value")
    return PortDir(code)


@dataclass(frozen=True, slots=True)
class PortList:
    """Immutable bit-packed sequence of 2-bit port codes.

    The first entry occupies the most significant bit pair, so the integer
    `bits` reads like the wire-order bit string. A list of length L occupies
    exactly 2L bits regardless of mesh size.
    """

    bits: int = 0
    length: int = 0

    def push(self, port: PortDir, limit: int | None = None) -> "PortList":
        """New list with `port` appended; raises when a length limit is hit."""
        if limit is not None and self.length >= limit:
            raise PortListOverflowError(f"port list already holds {self.length} entries (limit {limit})")
        return PortList((self.bits << 2) | encode_port(port), self.length + 1)

    def entry(self, index: int) -> PortDir:
        if not 0 <= index < self.length:
            raise IndexError(f"entry {index} out of range for length {self.length}")
        return decode_port((self.bits >> (2 * (self.length - 1 - index))) & 0b11)

    def prefix(self, count: int) -> "PortList":
        """The first `count` entries."""
        if not 0 <= count <= self.length:
            raise IndexError(f"prefix {count} out of range for length {self.length}")
        return PortList(self.bits >> (2 * (self.length - count)), count)

    def reverse_complement(self) -> "PortList":
        """Reverse the entries (2-bit granularity), then complement both bits
        of each entry. Following the result from a path's endpoint retraces
        the path back to its start."""
        out = 0
        bits = self.bits
        for _ in range(self.length):
            out = (out << 2) | ((bits & 0b11) ^ 0b11)
            bits >>= 2
        return PortList(out, self.length)

    def bitstring(self) -> str:
        if self.length == 0:
            return ""
        return format(self.bits, f"0{2 * self.length}b")

    def packed_bytes(self) -> bytes:
        """Big-endian packing: first entry in the top bits of the first byte,
        final partial byte zero-padded. Size is ceil(2L/8) bytes."""
        nbytes = (2 * self.length + 7) // 8
        return (self.bits << (8 * nbytes - 2 * self.length)).to_bytes(nbytes, "big")

    @classmethod
    def from_ports(cls, ports) -> "PortList":
        lst = cls()
        for port in ports:
            lst = lst.push(port)
        return lst

    @classmethod
    def from_bitstring(cls, text: str) -> "PortList":
        if len(text) % 2 != 0:
            raise InvalidPortError("bit string length must be even")
        return cls(int(text, 2) if text else 0, len(text) // 2)

    def __iter__(self) -> Iterator[PortDir]:
        for i in range(self.length):
            yield self.entry(i)

    def __len__(self) -> int:
        return self.length


def walk(path: PortList, start: NodeId, mesh: Mesh) -> list[NodeId]:
    """Node sequence visited by following `path` from `start` (start included).

    Raises InvalidPathError if any step leaves the mesh.
    """
    if not mesh.contains(start):
        raise InvalidPathError(f"walk start {start} is outside the mesh")
    nodes = [start]
    current = start
    for i, port in enumerate(path):
        nxt = mesh.neighbor(current, port)
        if nxt is None:
            raise InvalidPathError(f"step {i} ({port.name}) leaves the mesh at {current}")
        nodes.append(nxt)
        current = nxt
    return nodes


@dataclass(frozen=True, slots=True)
class FlowId:
    """Globally unique flow identity: source node plus a per-source counter."""

    source: NodeId
    sequence: int

    def __str__(self) -> str:
        return f"{self.source}:{self.sequence}"


@dataclass(frozen=True, slots=True)
class ForwardBee:
    """Flooding discovery packet. Records its path as port codes and never
    reserves anything; hop_counter always equals the recorded path length."""

    flow: FlowId
    source: NodeId
    destination: NodeId
    hop_counter: int
    required_bandwidth: float
    ports: PortList

    def advanced(self, port: PortDir, limit: int | None = None) -> "ForwardBee":
        """Copy of this bee one hop further through `port`."""
        return ForwardBee(
            flow=self.flow,
            source=self.source,
            destination=self.destination,
            hop_counter=self.hop_counter + 1,
            required_bandwidth=self.required_bandwidth,
            ports=self.ports.push(port, limit),
        )


@dataclass(frozen=True, slots=True)
class BackwardBee:
    """Reservation packet retracing a discovered path from the destination.

    `route` is the forward path already reversed and complemented.
    `next_index` counts the route entries traversed so far; `reserved_prefix`
    counts the links successfully reserved, which equals next_index while the
    bee sits at a node and next_index - 1 while it is in flight.
    `bee_index` (0..2) distinguishes sibling bees of the same flow so their
    reservations never get confused on shared links.
    """

    flow: FlowId
    bee_index: int
    route: PortList
    next_index: int
    required_bandwidth: float
    reserved_prefix: int


class ControlKind(Enum):
    TEARDOWN = "teardown"
    RELEASE = "release"


@dataclass(frozen=True, slots=True)
class ControlPacket:
    """Small packet that frees wires and flow-table entries along `route`.

    A teardown travels the forward path from the source after data transfer;
    a release retraces the reserved prefix of a failed or losing backward
    bee. `bee_index` selects whose reservations are freed.
    """

    kind: ControlKind
    flow: FlowId
    bee_index: int
    route: PortList
    next_index: int


# Serialized forward-bee layout (all fields big-endian): source (x u16,
# y u16), flow sequence u32, destination (x u16, y u16), hop counter u16,
# required bandwidth f64, port-list length u16, then the packed port bits.
_FORWARD_HEADER = struct.Struct(">HHIHHHdH")


def serialize_forward_bee(bee: ForwardBee) -> bytes:
    header = _FORWARD_HEADER.pack(
        bee.flow.source.x,
        bee.flow.source.y,
        bee.flow.sequence,
        bee.destination.x,
        bee.destination.y,
        bee.hop_counter,
        bee.required_bandwidth,
        bee.ports.length,
    )
    return header + bee.ports.packed_bytes()


FORWARD_HEADER_SIZE = _FORWARD_HEADER.size
