"""Learning-augmented online policy selection.

At each slot the sender sees the sizes so far plus sampled completions of
the future drawn from a known distribution.  For every candidate spread
value it asks the suffix optimizer how much parity the remainder of the
transmission would cost on each sampled future, and picks the candidate
with the smallest empirical mean (empirical risk minimization).  A sample
count derived from the accuracy target makes the resulting expected rate
provably close to the best any online scheme can do.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Protocol, Sequence

from .model import CodeParams, MessagePacket, SizeSequence, validate_params
from .offline import PrefixPin, solve_offline_suffix
from .spread_code import ParitySchedule, SpreadEncoder, parity_schedule, rate


class DistributionError(ValueError):
    """A size distribution is malformed."""


_PROB_TOL = 1e-12


@dataclass(frozen=True)
class SizeDistribution:
    """Generative model for per-slot message sizes over {0..m}.

    kind "iid":    every data slot drawn independently from probs.
    kind "markov": first data slot from init, later slots via trans rows
                   conditioned on the previous slot's size.
    """

    kind: str
    probs: tuple[float, ...] = ()
    init: tuple[float, ...] = ()
    trans: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.kind == "iid":
            _check_pvector(self.probs, "probs")
        elif self.kind == "markov":
            _check_pvector(self.init, "init")
            if len(self.trans) != len(self.init):
                raise DistributionError("trans must have one row per state")
            for r, row in enumerate(self.trans):
                _check_pvector(row, f"trans[{r}]")
                if len(row) != len(self.init):
                    raise DistributionError("trans rows must match state count")
        else:
            raise DistributionError(f"unknown distribution kind {self.kind!r}")

    @property
    def max_size(self) -> int:
        return (len(self.probs) if self.kind == "iid" else len(self.init)) - 1

    @classmethod
    def iid(cls, probs: Sequence[float]) -> "SizeDistribution":
        return cls(kind="iid", probs=tuple(probs))

    @classmethod
    def markov(
        cls, init: Sequence[float], trans: Sequence[Sequence[float]]
    ) -> "SizeDistribution":
        return cls(kind="markov", init=tuple(init), trans=tuple(tuple(r) for r in trans))

    @classmethod
    def point_mass(cls, value: int, m: int) -> "SizeDistribution":
        probs = [0.0] * (m + 1)
        probs[value] = 1.0
        return cls.iid(probs)

    @classmethod
    def from_dict(cls, data: dict) -> "SizeDistribution":
        kind = data.get("kind")
        if kind == "iid":
            return cls.iid(data["probs"])
        if kind == "markov":
            return cls.markov(data["init"], data["trans"])
        raise DistributionError(f"unknown distribution kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "iid":
            return {"kind": "iid", "probs": list(self.probs)}
        return {
            "kind": "markov",
            "init": list(self.init),
            "trans": [list(r) for r in self.trans],
        }

    # -- sampling -----------------------------------------------------------

    def _slot_probs(self, prev: Optional[int]) -> tuple[float, ...]:
        if self.kind == "iid":
            return self.probs
        return self.init if prev is None else self.trans[prev]

    def sample_sequence(self, params: CodeParams, rng: random.Random) -> SizeSequence:
        """Draw a full padded size sequence (data slots only are random)."""
        k = [0] * (params.t + 1)
        prev: Optional[int] = None
        values = range(self.max_size + 1)
        for i in range(2 * params.tau, params.t - 2 * params.tau + 1):
            prev = rng.choices(values, weights=self._slot_probs(prev))[0]
            k[i] = prev
        return SizeSequence(tuple(k))

    def sample_tail(
        self, params: CodeParams, history: Sequence[int], rng: random.Random
    ) -> tuple[int, ...]:
        """One completion k_{i+1}..k_t conditioned on the realized history."""
        start = len(history)
        lo, hi = 2 * params.tau, params.t - 2 * params.tau
        prev: Optional[int] = None
        if self.kind == "markov" and start - 1 >= lo:
            prev = history[start - 1] if start - 1 <= hi else history[hi]
        tail = []
        values = range(self.max_size + 1)
        for i in range(start, params.t + 1):
            if lo <= i <= hi:
                prev = rng.choices(values, weights=self._slot_probs(prev))[0]
                tail.append(prev)
            else:
                tail.append(0)
        return tuple(tail)

    def zero_probability(self, params: CodeParams) -> float:
        """Probability that every data slot draws size zero."""
        n = params.t - 4 * params.tau + 1
        if self.kind == "iid":
            return self.probs[0] ** n
        p = self.init[0]
        for _ in range(n - 1):
            p *= self.trans[0][0]
        return p


def _check_pvector(vec: Sequence[float], name: str) -> None:
    if not vec:
        raise DistributionError(f"{name} must be non-empty")
    if any(v < 0 for v in vec):
        raise DistributionError(f"{name} has negative entries")
    if abs(sum(vec) - 1.0) > _PROB_TOL:
        raise DistributionError(f"{name} sums to {sum(vec)!r}, expected 1")


@dataclass(frozen=True)
class SideInformation:
    """Sampled completions of the future size sequence."""

    slot: int
    samples: tuple[tuple[int, ...], ...]


class PolicyChooser(Protocol):
    """Pluggable per-slot spread selection criterion.

    Any callable with this shape can replace the ERM chooser in
    :func:`run_online`; the rate guarantee carries over to criteria whose
    expected regret stays within the same bound.
    """

    def __call__(
        self,
        params: CodeParams,
        k_history: Sequence[int],
        f_history: Sequence[int],
        side: "SideInformation",
        memo: Optional[dict] = None,
    ) -> int: ...


def sample_side_information(
    dist: SizeDistribution,
    params: CodeParams,
    history: Sequence[int],
    count: int,
    seed,
) -> SideInformation:
    """count independent conditional tails given the sizes seen so far."""
    if count < 1:
        raise DistributionError("need at least one sample")
    rng = random.Random(seed)
    samples = tuple(dist.sample_tail(params, history, rng) for _ in range(count))
    return SideInformation(slot=len(history) - 1, samples=samples)


def required_samples(m: int, eps: float) -> int:
    """Side-information sample count that keeps the expected rate within eps
    of the online optimum."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    return math.ceil(
        math.sqrt(math.log(8 * m * m / eps)) * 2 * math.sqrt(2) * m**3 / eps
    )


def choose_policy_online(
    params: CodeParams,
    k_history: Sequence[int],
    f_history: Sequence[int],
    side: SideInformation,
    memo: Optional[dict] = None,
) -> int:
    """Spread value minimizing mean suffix parity over the sampled futures.

    For candidate l and sample tail, the cost is the total parity from the
    current slot onward of the optimal completion with the transmitted
    prefix (and the candidate itself) frozen.  Ties pick the smallest l.
    Suffix solves are memoized by (slot, prefix, candidate, tail) since
    samples repeat heavily at small m.
    """
    i = len(k_history) - 1
    k_i = k_history[i]
    if k_i == 0:
        return 0
    if memo is None:
        memo = {}
    hist = tuple(k_history)
    fpre = tuple(f_history)
    pins_base = [PrefixPin(slot=j, f=fpre[j]) for j in range(i)]

    best_l = 0
    best_total: Optional[int] = None
    for l in range(k_i + 1):
        total = 0
        for tail in side.samples:
            key = (i, hist, fpre, l, tail)
            z = memo.get(key)
            if z is None:
                sizes = SizeSequence(hist + tail)
                sol = solve_offline_suffix(
                    params, sizes, pins_base + [PrefixPin(slot=i, f=l)]
                )
                z = sum(sol.p[i:])
                memo[key] = z
            total += z
        # comparing integer sums == comparing means; the normalizer is moot
        if best_total is None or total < best_total:
            best_total = total
            best_l = l
    return best_l


@dataclass(frozen=True)
class RegretReport:
    """Extra symbols sent versus the offline optimum, slot by slot."""

    per_slot: tuple[int, ...]
    total: int
    online_symbols: int
    offline_symbols: int
    online_rate: Optional[Fraction]
    offline_rate: Optional[Fraction]


def regret_report(
    params: CodeParams, sizes: SizeSequence, f_used: Sequence[int]
) -> RegretReport:
    """Sequential-improvement regret accounting.

    Walking i from the last data slot down to the first, re-solve the
    suffix from slot i with everything before i frozen at the transmitted
    values; the drop in total symbols attributable to step i is that slot's
    regret.  The per-slot values sum to exactly (online symbols sent) -
    (offline-optimal symbols sent).
    """
    validate_params(params)
    sizes.check(params)
    t, tau = params.t, params.tau
    k_total = sizes.total()
    used_sched = parity_schedule(params, sizes, f_used)
    online_symbols = k_total + used_sched.total_parity()

    lo, hi = 2 * tau, t - 2 * tau
    per_slot = [0] * (t + 1)
    prev_total = online_symbols
    for i in range(hi, lo - 1, -1):
        pins = [PrefixPin(slot=j, f=f_used[j]) for j in range(i)]
        sol = solve_offline_suffix(params, sizes, pins)
        cur_total = k_total + sum(sol.p)
        per_slot[i] = prev_total - cur_total
        prev_total = cur_total
    offline_symbols = prev_total

    n_online = used_sched.n_counts()
    online_rate = rate(sizes, n_online)
    offline_rate = (
        Fraction(k_total, offline_symbols) if offline_symbols else None
    )
    return RegretReport(
        per_slot=tuple(per_slot),
        total=online_symbols - offline_symbols,
        online_symbols=online_symbols,
        offline_symbols=offline_symbols,
        online_rate=online_rate,
        offline_rate=offline_rate,
    )


@dataclass(frozen=True)
class TranscriptRow:
    slot: int
    k: int
    f: int
    f_prime: int
    p: int
    n: int


@dataclass(frozen=True)
class OnlineRun:
    sizes: SizeSequence
    policy: tuple[int, ...]
    schedule: ParitySchedule
    transcript: tuple[TranscriptRow, ...]
    report: RegretReport


def run_online(
    params: CodeParams,
    dist: SizeDistribution,
    samples: int,
    seed,
    memo: Optional[dict] = None,
    chooser: PolicyChooser = choose_policy_online,
) -> OnlineRun:
    """One seeded online transmission: draw sizes, pick spreads slot by slot
    via the chooser (ERM by default), encode, and account regret against
    the offline optimum."""
    validate_params(params)
    if dist.max_size > params.m:
        raise DistributionError(
            f"distribution produces sizes up to {dist.max_size} > m={params.m}"
        )
    rng = random.Random(f"spreadcode-online:{seed}")
    sizes = dist.sample_sequence(params, rng)
    k = sizes.k
    t, tau = params.t, params.tau

    f = [0] * (t + 1)
    for i in range(2 * tau, t - 2 * tau + 1):
        side_seed = rng.getrandbits(63)
        side = sample_side_information(dist, params, k[: i + 1], samples, side_seed)
        f[i] = chooser(params, k[: i + 1], f[:i], side, memo=memo)

    sched = parity_schedule(params, sizes, f)
    enc = SpreadEncoder(sched)
    transcript = []
    for i in range(t + 1):
        syms = tuple(rng.randrange(1 << params.width) for _ in range(k[i]))
        pkt = enc.encode_slot(MessagePacket(slot=i, symbols=syms))
        transcript.append(
            TranscriptRow(
                slot=i, k=k[i], f=f[i], f_prime=sched.f_prime[i], p=sched.p[i], n=pkt.n
            )
        )
    report = regret_report(params, sizes, f)
    return OnlineRun(
        sizes=sizes,
        policy=tuple(f),
        schedule=sched,
        transcript=tuple(transcript),
        report=report,
    )


def exact_online_optimal_rate(
    params: CodeParams, dist: SizeDistribution
) -> Optional[float]:
    """Expected rate of the best possible online scheme, by enumeration.

    Test-only oracle: walks the full tree of histories, choosing the spread
    that maximizes the expected final rate at every node, exactly as an
    optimal online policy would.  Exponential in the number of data slots,
    so keep m <= 2 and t <= 4*tau + 3.  All-zero realizations carry no
    data and no policy choice, so the expectation conditions on at least
    one nonzero slot; returns None when the distribution is identically
    zero.
    """
    validate_params(params)
    t, tau = params.t, params.tau
    data_slots = list(range(2 * tau, t - 2 * tau + 1))
    values = range(dist.max_size + 1)

    def best_contribution(idx: int, hist: tuple[int, ...], fpre: tuple[int, ...]) -> float:
        if idx == len(data_slots):
            k = [0] * (t + 1)
            f = [0] * (t + 1)
            for slot, kv, fv in zip(data_slots, hist, fpre):
                k[slot] = kv
                f[slot] = fv
            total_k = sum(k)
            if total_k == 0:
                return 0.0
            sched = parity_schedule(params, SizeSequence(tuple(k)), f)
            return total_k / (total_k + sched.total_parity())
        prev = hist[-1] if (dist.kind == "markov" and hist) else None
        probs = dist._slot_probs(prev)
        acc = 0.0
        for val in values:
            prob = probs[val]
            if prob == 0.0:
                continue
            best = max(
                best_contribution(idx + 1, hist + (val,), fpre + (l,))
                for l in range(val + 1)
            )
            acc += prob * best
        return acc

    p_zero = dist.zero_probability(params)
    if p_zero >= 1.0:
        return None
    return best_contribution(0, (), ()) / (1.0 - p_zero)
