"""Core domain objects: parameters, size sequences, packets, and padding rules.

All types here are immutable value objects shared by the codec, the channel
simulator, and the policy optimizers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence


class ParameterError(ValueError):
    """Invalid code parameters; carries the list of violated rules by name."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


class SizeError(ValueError):
    """A message size is out of range or a sequence breaks the padding rules."""


class CorruptPacketError(ValueError):
    """A received packet disagrees with its own header."""


@dataclass(frozen=True)
class CodeParams:
    """Transmission parameters.

    tau    -- worst-case decoding delay in slots
    b      -- maximum burst length (slots)
    t      -- index of the last slot (transmission spans t + 1 slots)
    m      -- maximum message size in symbols
    width  -- field width in bits (symbols live in GF(2^width))
    tau_l  -- lossless decoding delay; this construction requires 1
    """

    tau: int
    b: int
    t: int
    m: int
    width: int = 16
    tau_l: int = 1


def param_violations(p: CodeParams) -> list[str]:
    """All validity rules violated by p, each reported by name."""
    out = []
    if p.b < 1:
        out.append(f"b >= 1 violated (b={p.b})")
    if not p.tau > p.b:
        out.append(f"tau > b violated (tau={p.tau}, b={p.b})")
    if p.t < 4 * p.tau:
        out.append(f"t >= 4*tau violated (t={p.t}, tau={p.tau})")
    if p.m < 1:
        out.append(f"m >= 1 violated (m={p.m})")
    if p.tau_l != 1:
        out.append(f"tau_L = 1 violated (tau_L={p.tau_l})")
    if (1 << p.width) < 4 * p.m * p.tau:
        out.append(
            f"field size >= 4*m*tau violated (2^{p.width} < {4 * p.m * p.tau})"
        )
    return out


def validate_params(p: CodeParams) -> None:
    """Raise ParameterError naming every violated rule; no-op when valid."""
    bad = param_violations(p)
    if bad:
        raise ParameterError(bad)


@dataclass(frozen=True)
class SizeSequence:
    """Per-slot message sizes k_0..k_t, already padded.

    The first and last 2*tau entries are zero so that the codec never has
    live data at the boundaries of the transmission.
    """

    k: tuple[int, ...]

    @property
    def t(self) -> int:
        return len(self.k) - 1

    def total(self) -> int:
        return sum(self.k)

    def check(self, p: CodeParams) -> None:
        if len(self.k) != p.t + 1:
            raise SizeError(f"sequence has {len(self.k)} entries, expected t+1={p.t + 1}")
        for i, v in enumerate(self.k):
            if v < 0 or v > p.m:
                raise SizeError(f"k_{i}={v} outside [0, m={p.m}]")
        for i in range(2 * p.tau):
            if self.k[i] != 0:
                raise SizeError(f"k_{i}={self.k[i]} nonzero inside leading padding")
        for i in range(p.t - 2 * p.tau + 1, p.t + 1):
            if self.k[i] != 0:
                raise SizeError(f"k_{i}={self.k[i]} nonzero inside trailing padding")


def pad_sequence(raw: Sequence[int], p: CodeParams) -> SizeSequence:
    """Surround raw sizes with 2*tau zeros each side, keeping t >= 4*tau.

    Only p.tau and p.m are consulted; the resulting sequence defines its own
    t (use :func:`instance_from_trace` to get matching params).  The total
    number of message symbols is unchanged by padding.
    """
    for i, v in enumerate(raw):
        if v < 0 or v > p.m:
            raise SizeError(f"trace entry {i} = {v} outside [0, m={p.m}]")
    k = [0] * (2 * p.tau) + list(raw) + [0] * (2 * p.tau)
    while len(k) < 4 * p.tau + 1:
        k.append(0)
    return SizeSequence(tuple(k))


def instance_from_trace(
    raw: Sequence[int], tau: int, b: int, m: int, width: int = 16
) -> tuple[CodeParams, SizeSequence]:
    """Build validated (params, sizes) for a raw trace."""
    proto = CodeParams(tau=tau, b=b, t=4 * tau, m=m, width=width)
    sizes = pad_sequence(raw, proto)
    params = replace(proto, t=sizes.t)
    validate_params(params)
    sizes.check(params)
    return params, sizes


@dataclass(frozen=True)
class MessagePacket:
    """The data arriving at the sender in one slot."""

    slot: int
    symbols: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class PacketHeader:
    """Metadata window shipped with each packet.

    Carries (k_{i-b}..k_i) and the corresponding requested per-slot spread
    values, enough for a receiver to rebuild the parity schedule
    incrementally without out-of-band state.
    """

    slot: int
    sizes: tuple[int, ...]
    policies: tuple[int, ...]


@dataclass(frozen=True)
class ChannelPacket:
    """One transmitted packet: immediate part, spread part, parity.

    u      -- symbols of this slot's message recovered tau slots later under loss
    v      -- symbols (this slot's + previous slot's trailing) recovered earlier
    parity -- parity symbols masking the u-part sent tau slots ago
    """

    slot: int
    u: tuple[int, ...]
    v: tuple[int, ...]
    parity: tuple[int, ...]
    header: PacketHeader

    @property
    def n(self) -> int:
        """Payload symbol count (header excluded from rate accounting)."""
        return len(self.u) + len(self.v) + len(self.parity)


# A received slot is either the packet or an erasure (None).
ReceivedPacket = Optional[ChannelPacket]


@dataclass
class TransmissionState:
    """Sender-side history: sizes seen so far and packets already emitted."""

    sizes: list[int] = field(default_factory=list)
    packets: list[ChannelPacket] = field(default_factory=list)

    @property
    def slot(self) -> int:
        """Next slot to encode."""
        return len(self.packets)


def header_overhead_symbols(p: CodeParams) -> int:
    """Header cost in symbols when headers are counted against the rate.

    The header holds 2*(b+1) values bounded by m, i.e. up to
    2*(b+1)*log2(m) bits, rounded up to whole field symbols.
    """
    if p.m <= 1:
        return 0
    bits = 2 * (p.b + 1) * math.log2(p.m)
    return math.ceil(bits / p.width)
