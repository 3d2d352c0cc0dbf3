"""Burst-only loss channel: pattern enumeration, generation, application.

A loss pattern is a set of bursts, each up to b consecutive slots long,
with at least tau received slots after a burst ends before the next one
may start.  That spacing is exactly what the decoder needs: the solving
window after a burst, and the packets feeding it, are always intact.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Sequence

from .model import ChannelPacket, CodeParams, ReceivedPacket


class PatternError(ValueError):
    """A loss pattern breaks the burst-channel rules."""


@dataclass(frozen=True)
class LossPattern:
    """Sorted (start, length) bursts."""

    bursts: tuple[tuple[int, int], ...]

    def covered(self) -> set[int]:
        out: set[int] = set()
        for start, length in self.bursts:
            out.update(range(start, start + length))
        return out

    def to_json(self) -> str:
        return json.dumps([[s, l] for s, l in self.bursts])

    @classmethod
    def from_json(cls, text: str) -> "LossPattern":
        data = json.loads(text)
        return cls(tuple((int(s), int(l)) for s, l in data))


def validate_pattern(params: CodeParams, pattern: LossPattern) -> None:
    """Raise PatternError unless the pattern is admissible for params."""
    prev_end = None
    for start, length in pattern.bursts:
        if length < 1 or length > params.b:
            raise PatternError(f"burst length {length} outside [1, b={params.b}]")
        if start < 0 or start + length - 1 > params.t:
            raise PatternError(f"burst ({start},{length}) outside [0, t={params.t}]")
        if prev_end is not None and start < prev_end + 1 + params.tau:
            raise PatternError(
                f"burst at {start} begins before {params.tau} clean slots after {prev_end}"
            )
        prev_end = start + length - 1


def enumerate_patterns(params: CodeParams, max_bursts: int) -> list[LossPattern]:
    """All admissible patterns with at most max_bursts bursts.

    Deterministic order: by burst count, then lexicographically by the
    flattened (start, length) pairs.
    """
    if max_bursts < 0:
        raise PatternError("max_bursts must be non-negative")
    t, b, tau = params.t, params.b, params.tau
    results: list[LossPattern] = []

    def extend(prefix: list[tuple[int, int]], next_start: int, remaining: int) -> None:
        results.append(LossPattern(tuple(prefix)))
        if remaining == 0:
            return
        for s in range(next_start, t + 1):
            for length in range(1, min(b, t - s + 1) + 1):
                prefix.append((s, length))
                extend(prefix, s + length + tau, remaining - 1)
                prefix.pop()

    extend([], 0, max_bursts)
    results.sort(key=lambda pat: (len(pat.bursts), pat.bursts))
    return results


def apply_channel(
    packets: Sequence[ChannelPacket], pattern: LossPattern, params: CodeParams
) -> list[ReceivedPacket]:
    """Erase the slots covered by the pattern; everything else is delivered."""
    validate_pattern(params, pattern)
    hit = pattern.covered()
    return [None if i in hit else pkt for i, pkt in enumerate(packets)]


def random_pattern(params: CodeParams, rng_seed, burst_prob: float) -> LossPattern:
    """Seeded random admissible pattern.

    Scans slots left to right; each eligible slot starts a burst with
    probability burst_prob, burst length uniform in [1, b] (clipped at
    the end of the transmission), then skips the mandatory tau clean slots.
    """
    if not 0.0 <= burst_prob <= 1.0:
        raise PatternError(f"burst_prob {burst_prob} outside [0, 1]")
    rng = random.Random(rng_seed)
    bursts: list[tuple[int, int]] = []
    i = 0
    while i <= params.t:
        if rng.random() < burst_prob:
            length = min(rng.randint(1, params.b), params.t - i + 1)
            bursts.append((i, length))
            i += length + params.tau
        else:
            i += 1
    return LossPattern(tuple(bursts))
