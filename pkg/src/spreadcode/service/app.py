"""FastAPI service exposing the optimizers and the experiment harness."""

from __future__ import annotations

import csv
import io

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..harness import (
    ConfigError,
    DecodeFailure,
    config_from_dict,
    run_experiment,
)
from ..model import ParameterError, SizeError, instance_from_trace
from ..offline import solve_offline
from ..online import DistributionError, SizeDistribution, run_online
from ..spread_code import parity_schedule, rate
from ..model import CodeParams, header_overhead_symbols, validate_params
from .schemas import (
    HealthResponse,
    OfflineRequest,
    OfflineResponse,
    OnlineRequest,
    OnlineResponse,
    OnlineTrialRow,
    RateOut,
    ResultRowOut,
    SimulateRequest,
    SimulateResponse,
)

app = FastAPI(
    title="spreadcode",
    version=__version__,
    description=(
        "Streaming erasure codes for variable-size messages over burst-loss "
        "channels: offline-optimal policies, learning-augmented online "
        "policies, and an experiment harness."
    ),
)


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/offline", response_model=OfflineResponse)
def offline(req: OfflineRequest) -> OfflineResponse:
    m = req.m if req.m is not None else max(req.sizes, default=1)
    try:
        params, sizes = instance_from_trace(req.sizes, req.tau, req.b, max(m, 1), req.width)
        solution = solve_offline(params, sizes)
        sched = parity_schedule(params, sizes, solution.f)
    except (ParameterError, SizeError) as exc:
        raise _bad_request(exc) from None
    n_counts = sched.n_counts()
    if req.count_headers:
        extra = header_overhead_symbols(params)
        n_counts = [n + extra if n else 0 for n in n_counts]
    r = rate(sizes, n_counts)
    return OfflineResponse(
        t=params.t,
        tau=params.tau,
        b=params.b,
        m=params.m,
        f=list(solution.f),
        f_prime=list(sched.f_prime),
        p=list(solution.p),
        sum_k=sizes.total(),
        sum_parity=solution.total_parity,
        sum_n=sum(n_counts),
        rate=None
        if r is None
        else RateOut(num=r.numerator, den=r.denominator, value=float(r)),
    )


@app.post("/online", response_model=OnlineResponse)
def online(req: OnlineRequest) -> OnlineResponse:
    t = req.t if req.t is not None else 4 * req.tau + 2
    params = CodeParams(tau=req.tau, b=req.b, t=t, m=req.m, width=req.width)
    try:
        validate_params(params)
        dist = SizeDistribution.from_dict(req.dist.as_dict())
    except (ParameterError, DistributionError) as exc:
        raise _bad_request(exc) from None
    rows: list[OnlineTrialRow] = []
    memo: dict = {}
    for trial in range(req.trials):
        try:
            run = run_online(params, dist, req.samples, f"{req.seed}:{trial}", memo=memo)
        except DistributionError as exc:
            raise _bad_request(exc) from None
        report = run.report
        rows.append(
            OnlineTrialRow(
                trial=trial,
                online_rate=None
                if report.online_rate is None
                else float(report.online_rate),
                offline_rate=None
                if report.offline_rate is None
                else float(report.offline_rate),
                total_regret=report.total,
            )
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["trial", "online_rate", "offline_rate", "total_regret"])
    for row in rows:
        writer.writerow(
            [
                row.trial,
                "undefined" if row.online_rate is None else format(row.online_rate, ".10g"),
                "undefined" if row.offline_rate is None else format(row.offline_rate, ".10g"),
                row.total_regret,
            ]
        )
    return OnlineResponse(rows=rows, csv=buf.getvalue())


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    data = req.model_dump(exclude_none=True)
    if req.source.kind == "dist":
        data["source"] = {"kind": "dist", "spec": req.source.spec.as_dict()}
    try:
        cfg = config_from_dict(data)
        result = run_experiment(cfg)
    except (ConfigError, ParameterError, SizeError, DistributionError) as exc:
        raise _bad_request(exc) from None
    except DecodeFailure as exc:
        raise HTTPException(
            status_code=500,
            detail={"message": str(exc), "bundle": exc.bundle},
        ) from None
    rows = [
        ResultRowOut(
            trial=r.trial,
            scheme=r.scheme,
            sum_k=r.sum_k,
            sum_n=r.sum_n,
            rate=None if r.rate is None else float(r.rate),
            regret=r.regret,
            decode_ok=r.decode_ok,
            ms=r.ms,
        )
        for r in result.rows
    ]
    return SimulateResponse(rows=rows, csv=result.csv, all_decoded=result.all_decoded)
