import random

import pytest

from spreadcode.model import CodeParams, MessagePacket, SizeSequence, validate_params


def gf_rank(gf, rows):
    """Independent oracle: row-echelon rank over the field."""
    rows = [list(r) for r in rows]
    rank = 0
    cols = len(rows[0]) if rows else 0
    for col in range(cols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = gf.inv(rows[rank][col])
        rows[rank] = [gf.mul(x, inv) for x in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                fct = rows[r][col]
                rows[r] = [x ^ gf.mul(fct, y) for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def random_instance(rng, tau_choices=(2, 3, 4), m_max=4, t_extra=6):
    """Random valid (params, sizes, policy) triple for round-trip tests."""
    tau = rng.choice(tau_choices)
    b = rng.randint(1, tau - 1)
    m = rng.randint(1, m_max)
    t = 4 * tau + rng.randint(0, t_extra)
    k = [0] * (t + 1)
    for i in range(2 * tau, t - 2 * tau + 1):
        k[i] = rng.randint(0, m)
    f = [rng.randint(0, k[i]) for i in range(t + 1)]
    params = CodeParams(tau=tau, b=b, t=t, m=m)
    validate_params(params)
    return params, SizeSequence(tuple(k)), f


def random_messages(rng, params, sizes):
    return [
        MessagePacket(
            slot=i,
            symbols=tuple(
                rng.randrange(1 << params.width) for _ in range(sizes.k[i])
            ),
        )
        for i in range(params.t + 1)
    ]


@pytest.fixture
def rng():
    return random.Random(0xC0DEC)
