"""Offline-optimal policy search.

The integer program behind the optimum minimizes total parity subject to a
family of burst lower bounds: for every deadline slot i and burst start j,
the message symbols that must be recovered by slot i cannot exceed the
parity available in the packets received after the burst.  Because, for a
fixed policy, the forward parity sweep already emits the minimum feasible
parity vector, optimizing reduces to a search over policies with parity
induced per candidate.  A depth-first branch-and-bound does that search;
an exhaustive oracle is kept alongside for verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Optional, Sequence

from .model import CodeParams, SizeSequence, validate_params
from .spread_code import parity_schedule


class GuardExceeded(ValueError):
    """The instance is too large for exhaustive enumeration."""


class PinError(ValueError):
    """Prefix pins are out of range or inconsistent with the parity sweep."""


@dataclass(frozen=True)
class Violation:
    """One violated lower-bound instance."""

    i: int
    j: int
    lhs: int
    rhs: int


@dataclass(frozen=True)
class PrefixPin:
    """Freeze slot's policy (and optionally its parity count) in a solve."""

    slot: int
    f: int
    p: Optional[int] = None


@dataclass(frozen=True)
class OfflineSolution:
    f: tuple[int, ...]
    p: tuple[int, ...]
    total_parity: int


def constraint_indices(params: CodeParams) -> Iterable[tuple[int, int]]:
    """All (deadline slot, burst start) pairs of the lower-bound family."""
    for i in range(3 * params.tau, params.t + 1):
        for j in range(i - params.tau - params.b + 1, i - params.tau + 2):
            yield i, j


def check_constraints(
    params: CodeParams,
    sizes: SizeSequence,
    policy: Sequence[int],
    parity: Sequence[int],
) -> list[Violation]:
    """Evaluate every lower-bound instance; empty result means feasible.

    policy is whatever per-slot placement the checked code actually uses;
    pass a schedule's adjusted spread when checking the schedule itself.
    """
    tau, b = params.tau, params.b
    k = sizes.k
    out: list[Violation] = []
    for i, j in constraint_indices(params):
        lhs = -policy[j - 1]
        if j + b - 1 == i - tau:
            lhs -= k[i - tau] - policy[i - tau]
        for l in range(j - 1, i - tau + 1):
            lhs += k[l]
        if lhs <= 0:
            continue
        rhs = sum(parity[l] for l in range(j + b, i + 1))
        if lhs > rhs:
            out.append(Violation(i=i, j=j, lhs=lhs, rhs=rhs))
    return out


def _free_slots(params: CodeParams, sizes: SizeSequence) -> list[int]:
    return [
        i
        for i in range(2 * params.tau, params.t - 2 * params.tau + 1)
        if sizes.k[i] > 0
    ]


def _expand_policy(params: CodeParams, assignment: dict[int, int]) -> list[int]:
    f = [0] * (params.t + 1)
    for slot, val in assignment.items():
        f[slot] = val
    return f


def solve_offline(params: CodeParams, sizes: SizeSequence) -> OfflineSolution:
    """Policy minimizing total parity; ties broken lexicographically.

    Branch-and-bound over the slots that can hold data, in slot order with
    candidate values ascending, pruning once the parity already committed
    matches the best complete solution.  Exploring candidates in ascending
    order and keeping only strict improvements makes the first optimum
    found the lexicographically smallest one.
    """
    return solve_offline_suffix(params, sizes, ())


def solve_offline_suffix(
    params: CodeParams, sizes: SizeSequence, pins: Sequence[PrefixPin]
) -> OfflineSolution:
    """Optimal completion of a transmission whose prefix is already sent.

    Pinned slots keep their transmitted policy; pinned parity counts, when
    given, are validated against the parity sweep (they are implied by the
    pinned policies, so a mismatch means the caller's bookkeeping is off).
    """
    validate_params(params)
    sizes.check(params)
    pinned: dict[int, int] = {}
    for pin in pins:
        if not 0 <= pin.slot <= params.t:
            raise PinError(f"pin slot {pin.slot} outside [0, t]")
        if not 0 <= pin.f <= sizes.k[pin.slot]:
            raise PinError(
                f"pinned f_{pin.slot}={pin.f} outside [0, k={sizes.k[pin.slot]}]"
            )
        if pin.slot in pinned and pinned[pin.slot] != pin.f:
            raise PinError(f"slot {pin.slot} pinned twice with different values")
        pinned[pin.slot] = pin.f

    tau, b, t, m = params.tau, params.b, params.t, params.m
    k = sizes.k
    lo, hi = 2 * tau, t - 2 * tau  # slots whose policy matters

    f = [0] * (t + 1)
    for slot, val in pinned.items():
        f[slot] = val
    p = [0] * (t + 1)
    fp = [0] * (t + 1)

    best_total: Optional[int] = None
    best_f: Optional[tuple[int, ...]] = None
    best_p: Optional[tuple[int, ...]] = None

    def parity_step(i: int) -> int:
        """p_{i+tau} for the current prefix of f/fp/p (same sweep as encoding)."""
        need = 0
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
        return need

    def descend(i: int, committed: int) -> None:
        nonlocal best_total, best_f, best_p
        if best_total is not None and committed >= best_total:
            return
        if i > hi:
            best_total = committed
            best_f = tuple(f)
            best_p = tuple(p)
            return
        if i in pinned or k[i] == 0:
            candidates: Sequence[int] = (f[i],) if i in pinned else (0,)
        else:
            candidates = range(k[i] + 1)
        for val in candidates:
            f[i] = val
            need = parity_step(i)
            p[i + tau] = need
            fp[i] = max(val, need)
            descend(i + 1, committed + need)
            p[i + tau] = 0
            fp[i] = 0
        f[i] = pinned.get(i, 0)

    descend(lo, 0)
    assert best_total is not None and best_f is not None and best_p is not None

    # cross-check pinned parity counts against the sweep-induced schedule
    sched = parity_schedule(params, sizes, best_f)
    for pin in pins:
        if pin.p is not None and sched.p[pin.slot] != pin.p:
            raise PinError(
                f"pinned p_{pin.slot}={pin.p} but the parity sweep gives "
                f"{sched.p[pin.slot]} for the pinned policies"
            )
    assert best_p == sched.p
    return OfflineSolution(f=best_f, p=best_p, total_parity=best_total)


def brute_force_oracle(
    params: CodeParams, sizes: SizeSequence, guard: int = 10**6
) -> tuple[tuple[int, ...], int]:
    """Exhaustive policy enumeration; the verification oracle for the solver.

    Walks every policy vector in lexicographic order, keeping the first
    one attaining the minimum total parity.
    """
    validate_params(params)
    sizes.check(params)
    free = _free_slots(params, sizes)
    combos = prod(sizes.k[i] + 1 for i in free)
    if combos > guard:
        raise GuardExceeded(f"{combos} policy vectors exceed the guard of {guard}")

    best_total: Optional[int] = None
    best_f: Optional[list[int]] = None
    assignment = {i: 0 for i in free}

    def walk(idx: int) -> None:
        nonlocal best_total, best_f
        if idx == len(free):
            f = _expand_policy(params, assignment)
            total = parity_schedule(params, sizes, f).total_parity()
            if best_total is None or total < best_total:
                best_total = total
                best_f = f
            return
        slot = free[idx]
        for val in range(sizes.k[slot] + 1):
            assignment[slot] = val
            walk(idx + 1)
        assignment[slot] = 0

    walk(0)
    assert best_total is not None and best_f is not None
    return tuple(best_f), best_total
