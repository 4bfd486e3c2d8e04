"""Command line front end, a thin client of the HTTP service.

By default requests run against the in-process app (no socket, no server to
manage); --server points the same client at a remote instance. Exit codes:
0 success, 2 validation/config error, 3 a not-found result under --strict.
Wall-clock goes to stderr so output files stay byte-identical across runs.
"""

from __future__ import annotations

import argparse
import asyncio
import base64
import os
import sys
import time

import httpx

from . import __version__
from .reports import atomic_write_bytes


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifs-lab", description="IFS chain/orbit laboratory")
    parser.add_argument("--version", action="version", version=f"ifs-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("config", help="config file path")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        if trials:
            p.add_argument("--trials", type=int, default=None, help="override the trial count")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--strict", action="store_true", help="exit 3 on not-found results")
        p.add_argument("--server", default=None, help="remote service URL (default: in-process)")

    common(sub.add_parser("run", help="execute a config and write its reports"))
    common(sub.add_parser("render", help="execute a render config and write the image"), trials=False)
    vp = sub.add_parser("validate", help="parse and validate a config without running it")
    vp.add_argument("config", help="config file path")
    vp.add_argument("--server", default=None, help="remote service URL (default: in-process)")

    sp = sub.add_parser("serve", help="start the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8337)
    return parser


async def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server is None:
        from .service import app

        transport = httpx.ASGITransport(app=app)
        base = "http://ifs-lab.internal"
    else:
        transport = None
        base = server.rstrip("/")
    async with httpx.AsyncClient(transport=transport, base_url=base, timeout=600.0) as client:
        return await client.post(path, json=payload)


def _read_config(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _run_command(args, endpoint: str) -> int:
    payload: dict = {"config_text": _read_config(args.config)}
    if args.seed is not None:
        payload["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        payload["trials"] = args.trials
    started = time.monotonic()
    resp = asyncio.run(_post(args.server, endpoint, payload))
    if resp.status_code != 200:
        detail = _detail(resp)
        print(f"error: {detail}", file=sys.stderr)
        return 2
    body = resp.json()
    os.makedirs(args.out, exist_ok=True)
    written = []
    for entry in body["files"]:
        data = (
            base64.b64decode(entry["content"])
            if entry["encoding"] == "base64"
            else entry["content"].encode("utf-8")
        )
        path = os.path.join(args.out, entry["name"])
        atomic_write_bytes(path, data)
        written.append(path)
    elapsed = time.monotonic() - started
    print(f"status: {body['status']}")
    for path in written:
        print(f"wrote {path}")
    print(f"wall-clock: {elapsed:.3f}s", file=sys.stderr)
    if body["status"] != "ok" and args.strict:
        return 3
    return 0


def _detail(resp: httpx.Response) -> str:
    try:
        return resp.json().get("detail", resp.text)
    except ValueError:
        return resp.text


def _validate_command(args) -> int:
    payload = {"config_text": _read_config(args.config)}
    resp = asyncio.run(_post(args.server, "/v1/validate", payload))
    if resp.status_code != 200:
        print(f"error: {_detail(resp)}", file=sys.stderr)
        return 2
    body = resp.json()
    print(f"ok: {body['scenario']} scenario")
    return 0


def _serve_command(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _run_command(args, "/v1/run")
    if args.command == "render":
        return _run_command(args, "/v1/render")
    if args.command == "validate":
        return _validate_command(args)
    return _serve_command(args)


if __name__ == "__main__":
    sys.exit(main())
