"""Command-line interface.

Subcommands::

    regime     classify the configured scenarios against the regime boundary
    cir        emit closed-form impulse-response curves and peak markers
    simulate   run the particle engine and emit the observation series
    snapshot   capture per-particle (x, r^2) clouds at chosen times
    ser        sweep the OOK symbol error rate
    preset     run a named experiment preset end to end

Common flags: ``--config`` (key = value file), ``--set key=value``
(repeatable, highest precedence), ``--seed``, ``--out``, ``--format``,
``--threads``.  The thread count never changes results.  Exit codes:
0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .ook import SerMethod
from .presets import (
    PRESETS,
    cir_action,
    discard_partial_outputs,
    preset_config,
    regime_action,
    ser_action,
    simulate_action,
    snapshot_action,
)
from .presets import run_preset as _run_preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="configuration file (key = value lines)")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override one configuration key")
    parser.add_argument("--seed", type=int, default=None, help="64-bit RNG seed")
    parser.add_argument("--out", metavar="DIR", default="out", help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (does not change results)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ductflow",
        description="Molecular-communication channel models for laminar duct flow")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("regime", "classify transport regimes"),
        ("cir", "emit analytic impulse responses"),
        ("simulate", "run the particle simulator"),
        ("snapshot", "emit particle position snapshots"),
        ("ser", "sweep the OOK symbol error rate"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        _add_common(cmd)
    preset = sub.add_parser("preset", help="run a named experiment preset")
    preset.add_argument("name", choices=sorted(PRESETS))
    _add_common(preset)
    return parser


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _dispatch(args: argparse.Namespace) -> list[Path]:
    overrides = _parse_overrides(args.overrides)
    out = Path(args.out)
    if args.command == "preset":
        cfg = preset_config(args.name, file_path=args.config,
                            overrides=overrides, seed=args.seed)
        return _run_preset(args.name, cfg, out, fmt=args.format, threads=args.threads)
    cfg = load_config(file_path=args.config, overrides=overrides, seed=args.seed)
    if args.command == "regime":
        action = lambda: regime_action(cfg, out, args.format)  # noqa: E731
    elif args.command == "cir":
        action = lambda: cir_action(cfg, out, args.format)  # noqa: E731
    elif args.command == "simulate":
        action = lambda: simulate_action(cfg, out, args.format, args.threads)  # noqa: E731
    elif args.command == "snapshot":
        action = lambda: snapshot_action(cfg, out, args.format, args.threads)  # noqa: E731
    elif args.command == "ser":
        methods = [SerMethod(cfg["ook.method"])]
        action = lambda: ser_action(cfg, out, args.format, args.threads, methods)  # noqa: E731
    else:  # pragma: no cover - argparse enforces the choices
        raise ConfigError(f"unknown command {args.command!r}")
    return discard_partial_outputs(action, out)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        written = _dispatch(args)
    except ConfigError as exc:
        print(f"ductflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"ductflow: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
