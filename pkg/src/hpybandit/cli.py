"""Operator entry points: `hpybandit simulate | serve | session ...`.

Exit codes: 0 success, 2 configuration/input error, 3 runtime error.
Everything printed to stdout is JSON (session commands, simulate receipts);
human diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import socket
import sys
from dataclasses import replace

import httpx

from .experiment import ConfigError, ExperimentConfig, PRESETS, preset_config, run_experiment
from .populations import read_label_counts
from .service import create_app
from .store import SessionStore

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

__all__ = ["main"]


def _fail(code: int, message: str) -> int:
    print(message, file=sys.stderr)
    return code


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# ---- simulate


def _load_experiment_config(source: str) -> ExperimentConfig:
    if source in PRESETS:
        return preset_config(source)
    if not os.path.exists(source):
        raise ConfigError(
            f"{source!r} is neither a preset ({', '.join(sorted(PRESETS))}) nor a file"
        )
    with open(source) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{source}: invalid JSON at line {e.lineno}: {e.msg}") from None
    return ExperimentConfig.from_json_dict(doc)


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = _load_experiment_config(args.config)
        seed = args.seed
        if seed is None and "HPYBANDIT_SEED" in os.environ:
            seed = int(os.environ["HPYBANDIT_SEED"])
        if seed is not None:
            cfg = replace(cfg, seed=seed)
    except (ConfigError, ValueError) as e:
        return _fail(EXIT_CONFIG, f"config error: {e}")
    try:
        trace = run_experiment(cfg, out_dir=args.out, threads=args.threads)
    except Exception as e:  # noqa: BLE001 - boundary: map to exit code
        return _fail(EXIT_RUNTIME, f"simulation failed: {e}")
    finals = {
        name: trace.final_cumulative(name).mean() for name in cfg.strategies
    }
    _emit(
        {
            "out": args.out,
            "trace": os.path.join(args.out, "trace.csv"),
            "summary": os.path.join(args.out, "summary.csv"),
            "seed": cfg.seed,
            "replicates": cfg.r_replicates,
            "mean_final_distinct": finals,
        }
    )
    return EXIT_OK


# ---- serve


def _parse_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {addr!r}")
    return host, int(port)


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        host, port = _parse_addr(args.addr)
    except ValueError as e:
        return _fail(EXIT_CONFIG, str(e))
    data_dir = args.data_dir or os.environ.get("HPYBANDIT_DATA_DIR", "advisor-data")
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host, port))
    except OSError as e:
        return _fail(EXIT_RUNTIME, f"cannot bind {args.addr}: {e}")
    finally:
        probe.close()
    try:
        store = SessionStore(data_dir, snapshot_every=args.snapshot_every)
    except (OSError, ValueError) as e:
        return _fail(EXIT_CONFIG, f"cannot open data dir {data_dir!r}: {e}")
    app = create_app(store, token=args.token)

    import uvicorn

    print(f"serving on http://{host}:{port} (data: {data_dir})", file=sys.stderr)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit) as e:
        return _fail(EXIT_RUNTIME, f"server stopped: {e}")
    return EXIT_OK


# ---- session client


def _request(args, method: str, path: str, **kwargs) -> int:
    headers = {}
    if args.token:
        headers["Authorization"] = f"Bearer {args.token}"
    url = args.url.rstrip("/") + path
    try:
        resp = httpx.request(method, url, headers=headers, timeout=60.0, **kwargs)
    except httpx.HTTPError as e:
        return _fail(EXIT_RUNTIME, f"request to {url} failed: {e}")
    try:
        body = resp.json()
    except ValueError:
        return _fail(EXIT_RUNTIME, f"non-JSON response ({resp.status_code}) from {url}")
    if resp.status_code >= 400:
        print(json.dumps(body, indent=2, sort_keys=True), file=sys.stderr)
        return EXIT_CONFIG if resp.status_code in (400, 422) else EXIT_RUNTIME
    _emit(body)
    return EXIT_OK


def _read_single_arm_counts(path: str) -> dict[str, int]:
    """Read a ``label,count`` (count optional) CSV into a counts mapping."""
    counts: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        if header not in (["label"], ["label", "count"]):
            raise ValueError(f"{path}: line 1: header must be label[,count]")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: line {lineno}: wrong field count")
            label = row[0].strip()
            if not label:
                raise ValueError(f"{path}: line {lineno}: empty label")
            n = 1
            if len(row) == 2:
                try:
                    n = int(row[1])
                except ValueError:
                    raise ValueError(f"{path}: line {lineno}: count must be an integer") from None
                if n < 1:
                    raise ValueError(f"{path}: line {lineno}: count must be positive")
            counts[label] = counts.get(label, 0) + n
    if not counts:
        raise ValueError(f"{path}: no data rows")
    return counts


def cmd_session_create(args: argparse.Namespace) -> int:
    try:
        counts = read_label_counts(args.init)
        config = {}
        if args.config:
            # a path, or the JSON document itself
            if args.config.lstrip().startswith("{"):
                config = json.loads(args.config)
            else:
                with open(args.config) as fh:
                    config = json.load(fh)
        if args.seed is None and "HPYBANDIT_SEED" in os.environ:
            args.seed = int(os.environ["HPYBANDIT_SEED"])
        if args.seed is not None:
            config["seed"] = args.seed
    except (OSError, ValueError) as e:
        return _fail(EXIT_CONFIG, f"config error: {e}")
    body = {"arms": list(counts), "counts": counts, "config": config}
    if args.session_id:
        body["session_id"] = args.session_id
    return _request(args, "POST", "/sessions", json=body)


def cmd_session_recommend(args: argparse.Namespace) -> int:
    return _request(
        args,
        "POST",
        f"/sessions/{args.id}/recommend",
        json={"mode": args.mode, "M": args.M},
    )


def cmd_session_observe(args: argparse.Namespace) -> int:
    try:
        counts = _read_single_arm_counts(args.counts)
    except ValueError as e:
        return _fail(EXIT_CONFIG, f"config error: {e}")
    return _request(
        args,
        "POST",
        f"/sessions/{args.id}/observations",
        json={"arm": args.arm, "counts": counts},
    )


def cmd_session_forecast(args: argparse.Namespace) -> int:
    params = {} if args.M is None else {"M": args.M}
    return _request(args, "GET", f"/sessions/{args.id}/forecast", params=params)


# ---- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hpybandit",
        description="Sequential experiment design for species discovery.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a strategy race and write CSVs")
    sim.add_argument("--config", required=True, help="preset name or JSON config path")
    sim.add_argument("--out", default="out", help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override the master seed")
    sim.add_argument("--threads", type=int, default=1, help="parallel replicate workers")
    sim.set_defaults(func=cmd_simulate)

    srv = sub.add_parser("serve", help="run the advisor HTTP service")
    srv.add_argument("--addr", default="127.0.0.1:8000", help="host:port to bind")
    srv.add_argument("--data-dir", default=None, help="session storage directory")
    srv.add_argument("--token", default=None, help="require this bearer token")
    srv.add_argument("--snapshot-every", type=int, default=5, help="events between snapshots")
    srv.set_defaults(func=cmd_serve)

    ses = sub.add_parser("session", help="drive a running advisor service")
    ses.add_argument("--url", default="http://127.0.0.1:8000", help="service base URL")
    ses.add_argument("--token", default=None, help="bearer token")
    ses_sub = ses.add_subparsers(dest="session_command", required=True)

    c = ses_sub.add_parser("create", help="create a session from an arm,label[,count] CSV")
    c.add_argument("--init", required=True, help="CSV of initial observations")
    c.add_argument("--config", default=None, help="session config: JSON file or inline document")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--session-id", default=None)
    c.set_defaults(func=cmd_session_create)

    r = ses_sub.add_parser("recommend", help="ask where to sample next")
    r.add_argument("--id", required=True)
    r.add_argument("--mode", choices=("incidence", "delayed"), default="incidence")
    r.add_argument("--M", type=int, required=True, help="batch budget")
    r.set_defaults(func=cmd_session_recommend)

    o = ses_sub.add_parser("observe", help="report a batch from a label[,count] CSV")
    o.add_argument("--id", required=True)
    o.add_argument("--arm", required=True)
    o.add_argument("--counts", required=True, help="CSV of observed labels")
    o.set_defaults(func=cmd_session_observe)

    f = ses_sub.add_parser("forecast", help="what-if forecast at budget M")
    f.add_argument("--id", required=True)
    f.add_argument("--M", type=int, default=None)
    f.set_defaults(func=cmd_session_forecast)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
