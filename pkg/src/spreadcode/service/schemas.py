"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field


class RateOut(BaseModel):
    """Exact rational rate plus a float rendering."""

    num: int
    den: int
    value: float


class OfflineRequest(BaseModel):
    sizes: list[int] = Field(description="raw per-slot message sizes, pre-padding")
    tau: int
    b: int
    m: Optional[int] = None  # defaults to max(sizes) (at least 1)
    width: int = 16
    count_headers: bool = False


class OfflineResponse(BaseModel):
    t: int
    tau: int
    b: int
    m: int
    f: list[int]
    f_prime: list[int]
    p: list[int]
    sum_k: int
    sum_parity: int
    sum_n: int
    rate: Optional[RateOut]


class DistributionSpec(BaseModel):
    kind: Literal["iid", "markov"]
    probs: Optional[list[float]] = None
    init: Optional[list[float]] = None
    trans: Optional[list[list[float]]] = None

    def as_dict(self) -> dict:
        if self.kind == "iid":
            return {"kind": "iid", "probs": self.probs or []}
        return {"kind": "markov", "init": self.init or [], "trans": self.trans or []}


class OnlineRequest(BaseModel):
    dist: DistributionSpec
    tau: int
    b: int
    m: int
    samples: int
    trials: int
    seed: int
    t: Optional[int] = None  # defaults to 4*tau + 2
    width: int = 16


class OnlineTrialRow(BaseModel):
    trial: int
    online_rate: Optional[float]
    offline_rate: Optional[float]
    total_regret: int


class OnlineResponse(BaseModel):
    rows: list[OnlineTrialRow]
    csv: str


class OnlineSchemeSpec(BaseModel):
    name: Literal["online"]
    samples: int


class TraceSource(BaseModel):
    kind: Literal["trace"]
    sizes: list[int]


class DistSource(BaseModel):
    kind: Literal["dist"]
    spec: DistributionSpec


class LossSpecModel(BaseModel):
    kind: Literal["enumerate", "random"]
    max_bursts: int = 2
    prob: float = 0.1
    seed: int = 0


class SimulateRequest(BaseModel):
    """A fully resolved experiment config (no file references)."""

    tau: int
    b: int
    m: int
    source: Union[TraceSource, DistSource]
    schemes: list[Union[str, OnlineSchemeSpec]]
    loss: LossSpecModel = LossSpecModel(kind="enumerate", max_bursts=2)
    trials: int = 1
    seed: Optional[int] = None
    width: int = 16
    t: Optional[int] = None
    count_headers: bool = False
    timing: bool = False


class ResultRowOut(BaseModel):
    trial: int
    scheme: str
    sum_k: int
    sum_n: int
    rate: Optional[float]
    regret: int
    decode_ok: bool
    ms: float


class SimulateResponse(BaseModel):
    rows: list[ResultRowOut]
    csv: str
    all_decoded: bool


class HealthResponse(BaseModel):
    status: str
    version: str
