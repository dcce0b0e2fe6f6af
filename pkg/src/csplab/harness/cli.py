"""Command-line client.

Every subcommand except `serve` is a thin HTTP client: it loads a TOML
config, posts it to the service, and writes the response to disk.  With
no --server it mounts the service in-process, so single-machine use
needs no running daemon; with --server it talks to a remote instance.

Exit codes: 0 when all tolerance checks pass, 1 when any check fails,
2 for usage, config, or transport errors.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import json
import sys
from pathlib import Path

import httpx

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - 3.10 fallback
    import tomli as tomllib

EXPERIMENT_KINDS = (
    "validate",
    "ensemble-2xor",
    "scan-d",
    "scan-g",
    "variance-study",
    "greedy-study",
    "lambda-min",
)


class CliError(Exception):
    """Fatal usage or transport problem; maps to exit code 2."""


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise CliError(f"config not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise CliError(f"bad TOML in {path}: {exc}") from exc


def _request(server: str | None, path: str, payload: dict) -> dict:
    async def go() -> httpx.Response:
        if server:
            async with httpx.AsyncClient(base_url=server, timeout=None) as client:
                return await client.post(path, json=payload)
        from .service import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://csplab.internal", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    try:
        response = asyncio.run(go())
    except httpx.HTTPError as exc:
        raise CliError(f"transport failure: {exc}") from exc
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise CliError(f"service rejected the request ({response.status_code}): {detail}")
    return response.json()


def _write_rows_jsonl(rows: list[dict], path: Path) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _write_rows_csv(rows: list[dict], path: Path) -> None:
    fields: list[str] = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def _print_checks(record: dict) -> None:
    for name, check in record["checks"].items():
        status = "ok" if check["ok"] else "VIOLATED"
        print(
            f"[check] {name}: value={check['value']:.6g} {check['comparison']} "
            f"limit={check['limit']:.6g} ... {status}"
        )
    print(f"[result] {'PASS' if record['passed'] else 'FAIL'} "
          f"(digest {record['digest'][:12]}, {record['wall_seconds']:.2f}s)")


def _run_experiment_command(args) -> int:
    payload = _load_toml(args.config) if args.config else {}
    payload["kind"] = args.kind
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.workers is not None:
        payload["workers"] = args.workers
    instance_path = payload.pop("instance_path", None)
    if instance_path:
        with open(instance_path) as fh:
            payload["instance"] = json.load(fh)
    record = _request(args.server, "/api/run", payload)
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        sibling = lambda ext: prefix.parent / (prefix.name + ext)
        _write_rows_jsonl(record["rows"], sibling(".rows.jsonl"))
        summary = {k: v for k, v in record.items() if k != "rows"}
        with open(sibling(".summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        if args.csv:
            _write_rows_csv(record["rows"], sibling(".rows.csv"))
    _print_checks(record)
    return 0 if record["passed"] else 1


def _run_gen_command(args) -> int:
    payload = _load_toml(args.config) if args.config else {}
    if args.seed is not None:
        payload["seed"] = args.seed
    instance = _request(args.server, "/api/instances", payload)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(instance, fh, indent=2)
        fh.write("\n")
    print(f"[gen] wrote {out} (n={instance['n']}, m={len(instance['constraints'])})")
    return 0


def _run_serve_command(args) -> int:
    import uvicorn

    uvicorn.run("csplab.harness.service:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csplab",
        description="Client for the CSP ensemble experiment service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--workers", type=int, help="override the worker count")
        p.add_argument("--out", help="output prefix for .rows.jsonl/.summary.json")
        p.add_argument("--csv", action="store_true", help="also export rows as CSV")
        p.add_argument("--server", help="remote service URL (default: in-process)")
        p.set_defaults(func=_run_experiment_command, kind=kind)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen.add_argument("--config", help="TOML instance request")
    gen.add_argument("--seed", type=int, help="override the seed")
    gen.add_argument("--out", required=True, help="path for the instance JSON")
    gen.add_argument("--server", help="remote service URL (default: in-process)")
    gen.set_defaults(func=_run_gen_command)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=_run_serve_command)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:  # pragma: no cover - console script shim
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
