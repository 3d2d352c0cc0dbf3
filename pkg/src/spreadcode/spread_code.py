"""The spread codec: parity scheduling, encoding, and decoding.

Each message S[i] of size k_i is split across packets X[i] and X[i+1]:
X[i] carries the first f'_i symbols (the "spread"), X[i+1] the rest, which
keeps the lossless decoding delay at one slot.  Parity counts p_i are the
smallest values that let every message be recovered within tau slots under
any admissible burst; they come out of a single forward sweep, and the
adjusted spread is f'_i = max(f_i, p_{i+tau}).

Within X[i] the message symbols split into U[i] (the first p_{i+tau}
symbols of S[i], recovered at slot i+tau via the parity of X[i+tau]) and
V[i] (everything else, recovered from parity received strictly earlier).
Parity mixes a sliding tau-slot window of V parts through fixed columns of
one 2m*tau x 2m*tau Cauchy matrix, so the unknowns of any admissible burst
meet a full-rank system.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .galois import Matrix, cauchy_matrix, field, solve_linear
from .model import (
    ChannelPacket,
    CodeParams,
    CorruptPacketError,
    MessagePacket,
    PacketHeader,
    ReceivedPacket,
    SizeSequence,
    TransmissionState,
    validate_params,
)


class ScheduleError(AssertionError):
    """A schedule invariant was broken; indicates a construction bug."""


class DecodeError(ValueError):
    """The receiver could not reconstruct a message it was owed."""


@dataclass(frozen=True)
class ParitySchedule:
    """Fully determined per-slot layout for one transmission.

    f        -- requested spread (the input policy), f_i in [0, k_i]
    f_prime  -- adjusted spread actually applied: max(f_i, p_{i+tau})
    p        -- per-slot parity counts
    """

    params: CodeParams
    k: tuple[int, ...]
    f: tuple[int, ...]
    f_prime: tuple[int, ...]
    p: tuple[int, ...]

    # -- per-slot layout ----------------------------------------------------

    def parity_at(self, i: int) -> int:
        return self.p[i] if 0 <= i <= self.params.t else 0

    def u_count(self, i: int) -> int:
        """Symbols of S[i] deferred to the parity of slot i + tau."""
        if i < 0 or i > self.params.t:
            return 0
        return min(self.parity_at(i + self.params.tau), self.k[i])

    def spread_at(self, i: int) -> int:
        """Symbols of S[i] placed in X[i] (the rest ride in X[i+1])."""
        if i < 0 or i > self.params.t:
            return 0
        return min(self.f_prime[i], self.k[i])

    def v_own(self, i: int) -> int:
        return self.spread_at(i) - self.u_count(i)

    def v_carry(self, i: int) -> int:
        """Trailing symbols of S[i-1] carried by X[i]."""
        if i <= 0:
            return 0
        return self.k[i - 1] - self.spread_at(i - 1)

    def v_count(self, i: int) -> int:
        return self.v_own(i) + self.v_carry(i)

    def n_count(self, i: int) -> int:
        return self.u_count(i) + self.v_count(i) + self.parity_at(i)

    def n_counts(self) -> list[int]:
        return [self.n_count(i) for i in range(self.params.t + 1)]

    def total_parity(self) -> int:
        return sum(self.p)

    def header_for(self, i: int) -> PacketHeader:
        lo = max(0, i - self.params.b)
        return PacketHeader(slot=i, sizes=self.k[lo : i + 1], policies=self.f[lo : i + 1])


def parity_schedule(
    params: CodeParams, sizes: SizeSequence, policy: Sequence[int]
) -> ParitySchedule:
    """Minimal parity counts and adjusted spreads for the given policy.

    One forward sweep over i = 2*tau .. t-2*tau: p_{i+tau} depends only on
    sizes and policy up to slot i and on parity counts already fixed, so
    each entry is final as soon as it is computed.
    """
    validate_params(params)
    sizes.check(params)
    tau, b, t = params.tau, params.b, params.t
    k = sizes.k
    f = tuple(policy)
    if len(f) != t + 1:
        raise ScheduleError(f"policy has {len(f)} entries, expected {t + 1}")
    for i, (fi, ki) in enumerate(zip(f, k)):
        if fi < 0 or fi > ki:
            raise ScheduleError(f"f_{i}={fi} outside [0, k_{i}={ki}]")

    p = [0] * (t + 1)
    fp = [0] * (t + 1)
    for i in range(2 * tau, t - 2 * tau + 1):
        need = 0
        # worst case over bursts of length b whose loss window touches S[i];
        # empty sums are zero, the max is floored at zero
        for j in range(i - b + 1, i + 2):
            term = 0
            if j + b - 1 >= i + 1:
                term += k[i] - f[i]
            if j <= i:
                term += f[i]
            for l in range(j, i + 1):
                term += k[l - 1] - fp[l - 1]
            for l in range(j, i):
                term += fp[l]
            for l in range(j + b, i + tau):
                term -= p[l]
            need = max(need, term)
        if need > 2 * params.m:
            # would overlap Cauchy column blocks within a tau-window
            raise ScheduleError(
                f"p_{i + tau}={need} exceeds 2m={2 * params.m} "
                f"(tau={tau} b={b} k={k} f={f})"
            )
        p[i + tau] = need
        fp[i] = max(f[i], need)
    return ParitySchedule(params=params, k=k, f=f, f_prime=tuple(fp), p=tuple(p))


def schedule_from_headers(
    params: CodeParams, headers: Sequence[PacketHeader]
) -> ParitySchedule:
    """Rebuild the schedule a receiver would infer from packet headers alone."""
    t = params.t
    if len(headers) != t + 1:
        raise CorruptPacketError(f"need {t + 1} headers, got {len(headers)}")
    k = [0] * (t + 1)
    f = [0] * (t + 1)
    for h in headers:
        for off, (kv, fv) in enumerate(zip(h.sizes, h.policies)):
            slot = h.slot - (len(h.sizes) - 1) + off
            k[slot] = kv
            f[slot] = fv
    return parity_schedule(params, SizeSequence(tuple(k)), f)


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


def coding_matrix(params: CodeParams) -> Matrix:
    """The shared 2m*tau x 2m*tau Cauchy matrix for these parameters."""
    side = 2 * params.m * params.tau
    return cauchy_matrix(field(params.width), side, side)


def _w_vector(
    sched: ParitySchedule, i: int, v_lookup: Callable[[int], Sequence[int]]
) -> list[int]:
    """Window vector feeding the parity of slot i.

    Lays out the V symbols of slots [i-tau, i-1] at block offset
    2m*(slot mod tau); unused positions stay zero.  v_lookup(j) returns the
    V symbols of slot j (zeros are fine for unknown positions).
    """
    m, tau = sched.params.m, sched.params.tau
    w = [0] * (2 * m * tau)
    for j in range(i - tau, i):
        if j < 0:
            continue
        base = 2 * m * (j % tau)
        for r, sym in enumerate(v_lookup(j)):
            w[base + r] = sym
    return w


def _parity_mix(
    sched: ParitySchedule, matrix: Matrix, i: int, w: Sequence[int]
) -> list[int]:
    """w times the p_i Cauchy columns assigned to slot i."""
    m, tau = sched.params.m, sched.params.tau
    gf = field(sched.params.width)
    base = 2 * m * (i % tau)
    out = []
    for c in range(sched.parity_at(i)):
        col = base + c
        acc = 0
        for r, wv in enumerate(w):
            if wv:
                acc ^= gf.mul(wv, matrix.entry(r, col))
        out.append(acc)
    return out


class SpreadEncoder:
    """Stateful slot-by-slot encoder for one transmission.

    Not thread-safe; run one encoder per transmission.
    """

    def __init__(self, sched: ParitySchedule):
        self.sched = sched
        self.matrix = coding_matrix(sched.params)
        self.state = TransmissionState()
        self._messages: list[tuple[int, ...]] = []
        self._u: list[tuple[int, ...]] = []
        self._v: list[tuple[int, ...]] = []

    def encode_slot(self, message: MessagePacket) -> ChannelPacket:
        sched = self.sched
        i = self.state.slot
        if message.slot != i:
            raise ScheduleError(f"expected slot {i}, got message for slot {message.slot}")
        if message.size != sched.k[i]:
            raise ScheduleError(
                f"message at slot {i} has {message.size} symbols, schedule says {sched.k[i]}"
            )
        syms = tuple(message.symbols)
        u = syms[: sched.u_count(i)]
        v_own = syms[sched.u_count(i) : sched.spread_at(i)]
        if i > 0 and sched.v_carry(i) > 0:
            v_carry = self._messages[i - 1][sched.spread_at(i - 1) :]
        else:
            v_carry = ()
        v = v_own + v_carry
        parity = self._parity(i)
        pkt = ChannelPacket(
            slot=i, u=u, v=v, parity=tuple(parity), header=sched.header_for(i)
        )
        self.state.sizes.append(sched.k[i])
        self.state.packets.append(pkt)
        self._messages.append(syms)
        self._u.append(u)
        self._v.append(v)
        return pkt

    def _parity(self, i: int) -> list[int]:
        sched = self.sched
        count = sched.parity_at(i)
        if count == 0:
            return []
        w = _w_vector(sched, i, lambda j: self._v[j])
        combos = _parity_mix(sched, self.matrix, i, w)
        j = i - sched.params.tau
        u_prev = self._u[j] if 0 <= j < len(self._u) else ()
        # parity masks the deferred symbols of slot i - tau, zero-padded
        return [(u_prev[c] if c < len(u_prev) else 0) ^ combos[c] for c in range(count)]


def encode_sequence(
    sched: ParitySchedule, messages: Sequence[MessagePacket]
) -> list[ChannelPacket]:
    """Encode a whole transmission at once."""
    enc = SpreadEncoder(sched)
    return [enc.encode_slot(msg) for msg in messages]


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------


def decode_lossless(
    packet: ChannelPacket, nxt: Optional[ChannelPacket], sched: ParitySchedule
) -> MessagePacket:
    """Reassemble S[i] from X[i] and X[i+1] when both were received."""
    i = packet.slot
    if packet.header.sizes[-1] != sched.k[i]:
        raise CorruptPacketError(
            f"slot {i}: header size {packet.header.sizes[-1]} != schedule k_i={sched.k[i]}"
        )
    if len(packet.u) != sched.u_count(i) or len(packet.v) != sched.v_count(i):
        raise CorruptPacketError(
            f"slot {i}: packet layout {len(packet.u)}/{len(packet.v)} does not match "
            f"schedule {sched.u_count(i)}/{sched.v_count(i)}"
        )
    head = packet.u + packet.v[: sched.v_own(i)]
    carry = sched.k[i] - sched.spread_at(i)
    if carry == 0:
        tail: tuple[int, ...] = ()
    else:
        if nxt is None:
            raise DecodeError(f"slot {i}: trailing symbols need packet {i + 1}")
        if len(nxt.v) != sched.v_count(i + 1):
            raise CorruptPacketError(
                f"slot {i + 1}: v length {len(nxt.v)} does not match schedule"
            )
        tail = nxt.v[sched.v_own(i + 1) :]
    return MessagePacket(slot=i, symbols=head + tail)


@dataclass
class BurstRecovery:
    """Everything reconstructed while clearing one burst.

    messages      -- full message per lost slot
    prev_trailing -- trailing symbols of the message before the burst that
                     were riding in the first lost packet
    v_values      -- recovered V symbols per lost slot (for reassembly)
    recovered_at  -- slot by which each lost message was complete
    v_solved_at   -- slot whose parity completed the V solve
    """

    start: int
    length: int
    messages: dict[int, MessagePacket]
    prev_trailing: tuple[int, ...]
    v_values: dict[int, tuple[int, ...]]
    recovered_at: dict[int, int]
    v_solved_at: int


def decode_burst(
    received: Sequence[ReceivedPacket],
    sched: ParitySchedule,
    burst_start: int,
    burst_len: int,
) -> BurstRecovery:
    """Recover the messages wiped out by one burst.

    Works in three steps: (1) strip the known deferred part off each parity
    packet in the tau-window after the burst and cancel the received V
    contributions, (2) solve the residual Cauchy system for the lost V
    symbols, (3) rebuild each lost slot's deferred part from the parity of
    slot +tau.  The channel guarantees the tau-window after (and before)
    the burst is loss-free.
    """
    params = sched.params
    tau, t = params.tau, params.t
    gf = field(params.width)
    matrix = coding_matrix(params)
    lost = list(range(burst_start, burst_start + burst_len))
    for j in lost:
        if received[j] is not None:
            raise DecodeError(f"slot {j} expected to be erased")

    def v_of(j: int) -> tuple[int, ...]:
        pkt = received[j]
        if pkt is None:
            raise DecodeError(f"needed packet {j} was erased")
        return pkt.v

    # unknown V positions in the shared window coordinates
    m = params.m
    rows: list[int] = []
    spans: dict[int, tuple[int, int]] = {}
    for lam in lost:
        base = 2 * m * (lam % tau)
        count = sched.v_count(lam)
        spans[lam] = (len(rows), count)
        rows.extend(range(base, base + count))

    # equations from parity received in the window after the burst
    cols: list[int] = []
    rhs: list[int] = []
    col_slots: list[int] = []
    window_end = min(burst_start + tau - 1, t)
    for j in range(burst_start + burst_len, window_end + 1):
        pj = sched.parity_at(j)
        if pj == 0:
            continue
        pkt = received[j]
        if pkt is None:
            raise DecodeError(f"parity packet {j} inside the clean window was erased")
        src = j - tau
        u_prev = received[src].u if src >= 0 and received[src] is not None else ()
        if src >= 0 and received[src] is None:
            raise DecodeError(f"packet {src} needed for parity of {j} was erased")
        pure = [
            (u_prev[c] if c < len(u_prev) else 0) ^ pkt.parity[c] for c in range(pj)
        ]
        # cancel contributions of V parts we already hold
        w_known = _w_vector(
            sched, j, lambda l: () if l in spans else v_of(l)
        )
        mixed = _parity_mix(sched, matrix, j, w_known)
        base = 2 * m * (j % tau)
        for c in range(pj):
            cols.append(base + c)
            col_slots.append(j)
            rhs.append(pure[c] ^ mixed[c])

    n_unknown = len(rows)
    if n_unknown > len(cols):
        raise DecodeError(
            f"burst at {burst_start}+{burst_len}: {n_unknown} unknowns but only "
            f"{len(cols)} parity equations"
        )
    solve_done = burst_start  # slot by which the V solve is complete
    if n_unknown:
        square = matrix.submatrix(rows, cols[:n_unknown])
        solution = solve_linear(gf, square, rhs[:n_unknown])
        solve_done = col_slots[n_unknown - 1]
        # remaining equations must agree; disagreement means corruption
        for extra in range(n_unknown, len(cols)):
            acc = 0
            for r_idx, r in enumerate(rows):
                if solution[r_idx]:
                    acc ^= gf.mul(solution[r_idx], matrix.entry(r, cols[extra]))
            if acc != rhs[extra]:
                raise DecodeError(
                    f"burst at {burst_start}: redundant parity equation disagrees"
                )
    else:
        solution = []

    v_values: dict[int, tuple[int, ...]] = {}
    for lam in lost:
        off, count = spans[lam]
        v_values[lam] = tuple(solution[off : off + count])

    def v_resolved(j: int) -> Sequence[int]:
        return v_values[j] if j in v_values else v_of(j)

    messages: dict[int, MessagePacket] = {}
    recovered_at: dict[int, int] = {}
    for lam in lost:
        own = v_values[lam][: sched.v_own(lam)]
        done = max(lam, solve_done) if sched.v_own(lam) else lam
        u_n = sched.u_count(lam)
        if u_n:
            jp = lam + tau
            pkt = received[jp]
            if pkt is None:
                raise DecodeError(f"parity packet {jp} for deferred symbols was erased")
            w = _w_vector(sched, jp, v_resolved)
            mixed = _parity_mix(sched, matrix, jp, w)
            u = tuple(pkt.parity[c] ^ mixed[c] for c in range(u_n))
            done = max(done, jp)
        else:
            u = ()
        carry = sched.k[lam] - sched.spread_at(lam)
        if carry:
            if lam + 1 in v_values:
                nxt_v: Sequence[int] = v_values[lam + 1]
                done = max(done, solve_done)
            else:
                nxt_v = v_of(lam + 1)
                done = max(done, lam + 1)
            tail = tuple(nxt_v[sched.v_own(lam + 1) : sched.v_own(lam + 1) + carry])
        else:
            tail = ()
        messages[lam] = MessagePacket(slot=lam, symbols=u + own + tail)
        recovered_at[lam] = done

    prev_trailing = v_values[burst_start][sched.v_own(burst_start) :] if lost else ()
    return BurstRecovery(
        start=burst_start,
        length=burst_len,
        messages=messages,
        prev_trailing=prev_trailing,
        v_values=v_values,
        recovered_at=recovered_at,
        v_solved_at=solve_done,
    )


@dataclass
class StreamDecodeResult:
    """All messages of a transmission plus the slot each became available."""

    messages: list[MessagePacket]
    recovered_at: list[int]


def decode_stream(
    received: Sequence[ReceivedPacket],
    sched: ParitySchedule,
    burst_cache: Optional[dict[tuple[int, int], BurstRecovery]] = None,
) -> StreamDecodeResult:
    """Decode a full received sequence, clearing every burst it contains.

    burst_cache, when given, memoizes per-burst recoveries keyed by
    (start, length); a burst's decode only reads packets outside any other
    admissible burst, so recoveries are reusable across loss patterns of
    the same transmission.
    """
    params = sched.params
    t = params.t
    bursts: list[tuple[int, int]] = []
    i = 0
    while i <= t:
        if received[i] is None:
            start = i
            while i <= t and received[i] is None:
                i += 1
            bursts.append((start, i - start))
        else:
            i += 1

    recoveries: dict[int, BurstRecovery] = {}
    for start, length in bursts:
        key = (start, length)
        if burst_cache is not None and key in burst_cache:
            rec = burst_cache[key]
        else:
            rec = decode_burst(received, sched, start, length)
            if burst_cache is not None:
                burst_cache[key] = rec
        for j in range(start, start + length):
            recoveries[j] = rec

    messages: list[MessagePacket] = []
    recovered_at: list[int] = []
    for i in range(t + 1):
        if i in recoveries:
            rec = recoveries[i]
            messages.append(rec.messages[i])
            recovered_at.append(rec.recovered_at[i])
            continue
        pkt = received[i]
        assert pkt is not None
        carry = sched.k[i] - sched.spread_at(i)
        if carry and i + 1 in recoveries:
            # our trailing symbols were in the erased next packet
            rec = recoveries[i + 1]
            head = pkt.u + pkt.v[: sched.v_own(i)]
            messages.append(MessagePacket(slot=i, symbols=head + rec.prev_trailing))
            recovered_at.append(max(i, rec.v_solved_at))
        else:
            nxt = received[i + 1] if i < t else None
            messages.append(decode_lossless(pkt, nxt, sched))
            recovered_at.append(i + 1 if carry else i)
    return StreamDecodeResult(messages=messages, recovered_at=recovered_at)


# ---------------------------------------------------------------------------
# rate
# ---------------------------------------------------------------------------


def rate(sizes: SizeSequence, n_counts: Sequence[int]) -> Optional[Fraction]:
    """Exact transmission rate sum(k)/sum(n); None when nothing was sent."""
    total_n = sum(n_counts)
    if total_n == 0:
        return None
    return Fraction(sizes.total(), total_n)


def render_rate(value: Optional[Fraction]) -> str:
    """Float rendering with 10 significant digits; 'undefined' for None."""
    if value is None:
        return "undefined"
    return format(float(value), ".10g")


# ---------------------------------------------------------------------------
# packet serialization (little-endian 16-bit symbols, length-prefixed)
# ---------------------------------------------------------------------------

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


def _pack_array(values: Sequence[int]) -> bytes:
    return _U16.pack(len(values)) + b"".join(_U16.pack(v) for v in values)


def _unpack_array(buf: bytes, off: int) -> tuple[tuple[int, ...], int]:
    (count,) = _U16.unpack_from(buf, off)
    off += 2
    vals = struct.unpack_from(f"<{count}H", buf, off)
    return vals, off + 2 * count


def packet_to_bytes(pkt: ChannelPacket) -> bytes:
    """Serialize a packet: slot, header window, then U, V, parity arrays."""
    out = [_U32.pack(pkt.slot)]
    out.append(_pack_array(pkt.header.sizes))
    out.append(_pack_array(pkt.header.policies))
    out.append(_pack_array(pkt.u))
    out.append(_pack_array(pkt.v))
    out.append(_pack_array(pkt.parity))
    return b"".join(out)


def packet_from_bytes(buf: bytes) -> ChannelPacket:
    (slot,) = _U32.unpack_from(buf, 0)
    off = 4
    sizes, off = _unpack_array(buf, off)
    policies, off = _unpack_array(buf, off)
    u, off = _unpack_array(buf, off)
    v, off = _unpack_array(buf, off)
    parity, off = _unpack_array(buf, off)
    if off != len(buf):
        raise CorruptPacketError(f"{len(buf) - off} trailing bytes after packet")
    header = PacketHeader(slot=slot, sizes=sizes, policies=policies)
    return ChannelPacket(slot=slot, u=u, v=v, parity=parity, header=header)
