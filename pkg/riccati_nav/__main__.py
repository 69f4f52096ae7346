"""Command-line entry point: ``riccati-nav run | pe-audit | batch``."""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .const import (
    DEFAULT_OUT_DIR,
    EXIT_CONFIG,
    EXIT_ERROR,
    EXIT_NUMERICAL,
    EXIT_OK,
    VARIANTS,
)
from .coordinator import async_run_batch, pe_audit, run_scenario
from .diagnostics import to_jsonable
from .exceptions import NumericalFailure, RiccatiNavError, ScenarioError
from .scenario import PRESETS, ScenarioConfig, load_scenario

_LOGGER = logging.getLogger(__name__)


def _add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", nargs="?", type=Path, help="scenario YAML file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    parser.add_argument("--seed", type=int, help="noise generator seed")
    parser.add_argument("--t-end", type=float, dest="t_end", help="run horizon (s)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riccati-nav",
        description="Riccati observer for position, velocity and attitude "
        "from IMU, a landmark bearing and a body-frame vector.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="simulate and estimate one scenario")
    _add_scenario_arguments(run)
    run.add_argument("--variant", choices=VARIANTS, help="observer variant")
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--preview", action="store_true", default=None, help="write a PNG preview")

    audit = commands.add_parser("pe-audit", help="sweep the bearing excitation margin")
    _add_scenario_arguments(audit)
    audit.add_argument("--delta", type=float, help="window length (s)")
    audit.add_argument("--step", type=float, help="window spacing (s)")

    batch = commands.add_parser("batch", help="run several scenarios concurrently")
    batch.add_argument("configs", nargs="+", type=Path, help="scenario YAML files")
    batch.add_argument("--out", type=Path, default=Path(DEFAULT_OUT_DIR), help="output root")
    batch.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def _emit(data: dict[str, Any]) -> None:
    print(json.dumps(to_jsonable(data), sort_keys=True))


def _error_payload(err: BaseException) -> dict[str, Any]:
    payload: dict[str, Any] = {"error": type(err).__name__, "message": str(err)}
    if isinstance(err, ScenarioError):
        payload["path"] = err.field
    if isinstance(err, NumericalFailure):
        payload["t"] = err.t
        payload["min_eig"] = err.min_eig
    return payload


def exit_code(err: BaseException) -> int:
    """Process exit code for a failure."""
    if isinstance(err, ScenarioError):
        return EXIT_CONFIG
    if isinstance(err, NumericalFailure):
        return EXIT_NUMERICAL
    return EXIT_ERROR


def _load(args: argparse.Namespace, **overrides: Any) -> ScenarioConfig:
    return load_scenario(
        args.config, preset=args.preset, seed=args.seed, t_end=args.t_end, **overrides
    )


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args, variant=args.variant, out_dir=args.out, preview=args.preview)
    if cfg.out_dir is None:
        cfg = dataclasses.replace(cfg, out_dir=Path(DEFAULT_OUT_DIR) / cfg.name)
    result = run_scenario(cfg)
    _emit(
        {
            "scenario": cfg.name,
            "variant": cfg.variant.value,
            "csv": str(result.csv_path),
            "metrics": result.metrics.as_dict(),
        }
    )
    return EXIT_OK


def _cmd_pe_audit(args: argparse.Namespace) -> int:
    cfg = _load(args)
    sweep = pe_audit(cfg, args.delta, args.step)
    _emit({"scenario": cfg.name, **sweep.as_dict()})
    return EXIT_OK


def _cmd_batch(args: argparse.Namespace) -> int:
    cfgs = [load_scenario(path) for path in args.configs]
    results = asyncio.run(async_run_batch(cfgs, args.out))
    code = EXIT_OK
    for cfg, result in zip(cfgs, results, strict=True):
        if isinstance(result, BaseException):
            print(json.dumps(to_jsonable(_error_payload(result))), file=sys.stderr)
            code = code or exit_code(result)
            continue
        _emit(
            {
                "scenario": cfg.name,
                "csv": str(result.csv_path),
                "converged": result.metrics.converged,
            }
        )
    return code


COMMANDS = {"run": _cmd_run, "pe-audit": _cmd_pe_audit, "batch": _cmd_batch}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except RiccatiNavError as err:
        _LOGGER.debug("Command %s failed", args.command, exc_info=True)
        print(json.dumps(to_jsonable(_error_payload(err))), file=sys.stderr)
        return exit_code(err)
    except OSError as err:
        print(json.dumps(_error_payload(err)), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
