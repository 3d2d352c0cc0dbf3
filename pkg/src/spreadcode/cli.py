"""Thin command-line client for the service.

Every subcommand turns its local files into one HTTP request.  By default
the request is served in-process (no socket involved); pass --server to
talk to a running instance instead, and use `spreadcode serve` to start
one.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import httpx

from .harness import load_config
from .online import SizeDistribution


class _InProcessTransport(httpx.BaseTransport):
    """Serve requests straight from the ASGI app, no socket involved."""

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        import asyncio

        async def call() -> httpx.Response:
            response = await self._asgi.handle_async_request(request)
            content = await response.aread()
            await response.aclose()
            return httpx.Response(
                status_code=response.status_code,
                headers=response.headers,
                content=content,
            )

        return asyncio.run(call())


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from .service.app import app

    return httpx.Client(
        transport=_InProcessTransport(app),
        base_url="http://spreadcode.internal",
        timeout=None,
    )


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    try:
        resp = client.post(path, json=payload)
    except httpx.TransportError as exc:
        print(f"error: cannot reach the service: {exc}", file=sys.stderr)
        raise SystemExit(1)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        print(f"error ({resp.status_code}): {json.dumps(detail, indent=2, default=str)}", file=sys.stderr)
        raise SystemExit(1)
    return resp.json()


def _read_trace(path: str) -> list[int]:
    from .harness import ingest_trace

    return ingest_trace(path)


def cmd_offline(args: argparse.Namespace) -> int:
    payload = {
        "sizes": _read_trace(args.trace),
        "tau": args.tau,
        "b": args.b,
        "width": args.width,
        "count_headers": args.count_headers,
    }
    if args.m is not None:
        payload["m"] = args.m
    with _client(args.server) as client:
        body = _post(client, "/offline", payload)
    print(json.dumps(body, indent=2))
    return 0


def cmd_online(args: argparse.Namespace) -> int:
    spec = SizeDistribution.from_dict(json.loads(Path(args.dist).read_text()))
    payload = {
        "dist": spec.to_dict(),
        "tau": args.tau,
        "b": args.b,
        "m": args.m,
        "samples": args.samples,
        "trials": args.trials,
        "seed": args.seed,
        "width": args.width,
    }
    if args.t is not None:
        payload["t"] = args.t
    with _client(args.server) as client:
        body = _post(client, "/online", payload)
    if args.out:
        Path(args.out).write_text(body["csv"])
    else:
        sys.stdout.write(body["csv"])
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    payload = {
        "tau": cfg.tau,
        "b": cfg.b,
        "m": cfg.m,
        "schemes": [
            s.name if s.name != "online" else {"name": "online", "samples": s.samples}
            for s in cfg.schemes
        ],
        "loss": {
            "kind": cfg.loss.kind,
            "max_bursts": cfg.loss.max_bursts,
            "prob": cfg.loss.prob,
            "seed": cfg.loss.seed,
        },
        "trials": cfg.trials,
        "seed": cfg.seed,
        "width": cfg.width,
        "count_headers": cfg.count_headers,
        "timing": cfg.timing,
    }
    if cfg.trace is not None:
        payload["source"] = {"kind": "trace", "sizes": list(cfg.trace)}
    else:
        assert cfg.dist is not None
        payload["source"] = {"kind": "dist", "spec": cfg.dist.to_dict()}
    if cfg.t is not None:
        payload["t"] = cfg.t
    with _client(args.server) as client:
        body = _post(client, "/simulate", payload)
    if cfg.output:
        Path(cfg.output).write_text(body["csv"])
        print(f"wrote {cfg.output}")
    else:
        sys.stdout.write(body["csv"])
    return 0 if body["all_decoded"] else 1


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("spreadcode.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spreadcode",
        description="Streaming erasure codes for variable-size messages over burst channels",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_off = sub.add_parser("offline", help="offline-optimal policy for a trace")
    p_off.add_argument("--trace", required=True, help="newline-delimited size file")
    p_off.add_argument("--tau", type=int, required=True)
    p_off.add_argument("--b", type=int, required=True)
    p_off.add_argument("--m", type=int, default=None, help="max size (default: max of trace)")
    p_off.add_argument("--width", type=int, default=16, help="field width in bits")
    p_off.add_argument(
        "--count-headers",
        action="store_true",
        help="charge per-packet header symbols against the rate",
    )
    p_off.add_argument("--server", default=None, help="base URL of a running service")
    p_off.set_defaults(func=cmd_offline)

    p_on = sub.add_parser("online", help="seeded online-vs-offline rate trials")
    p_on.add_argument("--dist", required=True, help="size distribution JSON file")
    p_on.add_argument("--tau", type=int, required=True)
    p_on.add_argument("--b", type=int, required=True)
    p_on.add_argument("--m", type=int, required=True)
    p_on.add_argument("--samples", type=int, required=True)
    p_on.add_argument("--trials", type=int, required=True)
    p_on.add_argument("--seed", type=int, required=True)
    p_on.add_argument("--t", type=int, default=None, help="last slot (default 4*tau+2)")
    p_on.add_argument("--width", type=int, default=16)
    p_on.add_argument("--out", default=None, help="write CSV here instead of stdout")
    p_on.add_argument("--server", default=None)
    p_on.set_defaults(func=cmd_online)

    p_sim = sub.add_parser("simulate", help="run an experiment config")
    p_sim.add_argument("--config", required=True, help="experiment config JSON")
    p_sim.add_argument("--server", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
