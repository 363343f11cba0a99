"""Command-line client for the analytics and simulation service.

Subcommands build a request, send it to the service (an in-process
instance by default, or a remote one via --server), and write the
response. Exit codes: 0 success, 1 runtime failure, 2 usage or config
error.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .model import ConfigError, ScenarioConfig, default_config, load_config, parse_rate

_LIST_KEYS = {"layer_rates"}
_RATE_KEYS = {"r_u", "r_v"}


class _ServiceError(Exception):
    def __init__(self, status: int, detail: str):
        self.status = status
        self.detail = detail
        super().__init__(f"service returned {status}: {detail}")


def _post(path: str, payload: dict, server: str | None) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(path, json=payload)
    else:
        from .service.app import create_app

        async def _go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(transport=transport, base_url="http://service",
                                         timeout=None) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(_go())
    if resp.status_code >= 400:
        raise _ServiceError(resp.status_code, resp.text)
    return resp.json()


def _parse_overrides(pairs: list[str]) -> dict:
    overrides: dict = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError([f"override {pair!r} is not KEY=VALUE"])
        key, value = pair.split("=", 1)
        key = key.strip()
        if key in _LIST_KEYS:
            overrides[key] = [parse_rate(v) for v in value.split(",") if v.strip()]
        elif key in _RATE_KEYS:
            overrides[key] = parse_rate(value)
        elif key == "master_seed":
            overrides[key] = int(value)
        else:
            overrides[key] = float(value)
    return overrides


def _load_config(args) -> ScenarioConfig:
    overrides = _parse_overrides(args.set or [])
    if args.config:
        return load_config(args.config, overrides)
    cfg = default_config()
    if overrides:
        data = cfg.to_dict()
        data.update(overrides)
        from .model import validate_config
        cfg = validate_config(ScenarioConfig.from_dict(data))
    return cfg


def _parse_d_list(text: str | None, fallback: float) -> list[float]:
    if text is None:
        return [fallback]
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ConfigError(["--d list is empty"])
    return values


def _fmt_floats(obj):
    if isinstance(obj, float):
        return float(format(obj, ".9g"))
    if isinstance(obj, dict):
        return {k: _fmt_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_fmt_floats(v) for v in obj]
    return obj


def _write_output(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit(response: dict, args) -> None:
    if args.format == "csv":
        _write_output(response["csv"], args.out)
    else:
        payload = {k: v for k, v in response.items() if k != "csv"}
        _write_output(json.dumps(_fmt_floats(payload), indent=2, sort_keys=True) + "\n", args.out)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a flat JSON scenario config")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable); rates accept kb/s, Mb/s suffixes")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vvstream",
                                     description="cooperative vehicular video streaming toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form throughput per inter-RSU distance")
    _add_common(p)
    p.add_argument("--d", help="comma-separated inter-RSU distances (m)")
    p.add_argument("--mode", choices=("one-hop", "cluster", "both"), default="both")

    p = sub.add_parser("simulate", help="Monte Carlo trials for one mode and strategy")
    _add_common(p)
    p.add_argument("--d", help="comma-separated inter-RSU distances (m)")
    p.add_argument("--mode", choices=("one-hop", "cluster", "relay-aided"), default="one-hop")
    p.add_argument("--strategy", choices=("bc", "greedy"), default="bc")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("sweep", help="full sweep over distances, modes, and strategies")
    _add_common(p)
    p.add_argument("--d", help="comma-separated inter-RSU distances (m); default 2000..10000 step 2000")
    p.add_argument("--modes", default="one-hop,cluster,relay-aided")
    p.add_argument("--strategies", default="bc,greedy")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("trace", help="single-trial dump of timeline, grid, ledger, allocation")
    _add_common(p)
    p.add_argument("--mode", choices=("one-hop", "cluster", "relay-aided"), default="one-hop")
    p.add_argument("--strategy", choices=("bc", "greedy"), default="bc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budgets", help="inject deterministic budgets (comma-separated bits)")
    p.add_argument("--intervals", help="inject deterministic intervals (comma-separated seconds)")
    p.add_argument("--rates", help="layer rates for injected budgets (comma-separated bit/s)")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_analyze(args) -> int:
    cfg = _load_config(args)
    modes = ["one-hop", "cluster"] if args.mode == "both" else [args.mode]
    payload = {
        "config": cfg.to_dict(),
        "d_values": _parse_d_list(args.d, cfg.d),
        "modes": modes,
    }
    _emit(_post("/analyze", payload, args.server), args)
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    payload = {
        "config": cfg.to_dict(),
        "mode": args.mode,
        "strategy": args.strategy,
        "trials": args.trials,
        "seed": args.seed,
        "d_values": _parse_d_list(args.d, cfg.d),
        "workers": args.workers,
    }
    _emit(_post("/simulate", payload, args.server), args)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    d_values = (_parse_d_list(args.d, cfg.d) if args.d is not None
                else [2000.0, 4000.0, 6000.0, 8000.0, 10000.0])
    payload = {
        "config": cfg.to_dict(),
        "d_values": d_values,
        "modes": [m for m in args.modes.split(",") if m],
        "strategies": [s for s in args.strategies.split(",") if s],
        "trials": args.trials,
        "seed": args.seed,
        "workers": args.workers,
    }
    _emit(_post("/sweep", payload, args.server), args)
    return 0


def _cmd_trace(args) -> int:
    if args.format == "csv":
        raise ConfigError(["trace output is JSON only; use --format json"])
    injected = None
    if args.budgets or args.intervals or args.rates:
        if not (args.budgets and args.intervals and args.rates):
            raise ConfigError(["injected traces need --budgets, --intervals and --rates together"])
        injected = {
            "budgets": [float(v) for v in args.budgets.split(",") if v.strip()],
            "intervals": [float(v) for v in args.intervals.split(",") if v.strip()],
            "layer_rates": [parse_rate(v) for v in args.rates.split(",") if v.strip()],
        }
    payload = {
        "config": _load_config(args).to_dict() if injected is None else None,
        "mode": args.mode,
        "strategy": args.strategy,
        "seed": args.seed,
        "injected": injected,
    }
    response = _post("/trace", payload, args.server)
    _write_output(json.dumps(_fmt_floats(response), indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("vvstream.service.app:app", host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "analyze": _cmd_analyze,
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "trace": _cmd_trace,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if exc.status < 500 else 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) else 1
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
