#!/usr/bin/env python3
"""
Run the eight-shaped reference study with every observer variant.

Each variant runs once noise-free and once with the reference magnetometer
noise. Outputs land in runs/study/<name>/ and a summary table is printed.

Usage:
  python scripts/reproduce_study.py [--t-end 30] [--out runs/study]
"""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import logging
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from riccati_nav import async_run_batch, load_scenario  # noqa: E402
from riccati_nav.const import (  # noqa: E402
    PRESET_REFERENCE,
    PRESET_REFERENCE_CLEAN,
    VARIANTS,
)


def _configs(t_end: float, seed: int):
    cfgs = []
    for preset, label in ((PRESET_REFERENCE_CLEAN, "clean"), (PRESET_REFERENCE, "noisy")):
        for variant in VARIANTS:
            cfg = load_scenario(preset=preset, variant=variant, t_end=t_end, seed=seed)
            cfgs.append(dataclasses.replace(cfg, name=f"{variant}-{label}", preview=True))
    return cfgs


def _fmt(value) -> str:
    if value is None:
        return "-"
    return f"{value:.3e}"


async def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--t-end", type=float, default=30.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=REPO_ROOT / "runs" / "study")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    cfgs = _configs(args.t_end, args.seed)
    results = await async_run_batch(cfgs, args.out)

    print(f"\n{'=' * 78}")
    print(
        f"{'run':<18}{'pos rmse':>11}{'vel rmse':>11}{'att rmse':>11}"
        f"{'t_conv':>9}{'m resid':>11}{'min mu':>11}"
    )
    failures = 0
    for cfg, result in zip(cfgs, results, strict=True):
        if isinstance(result, BaseException):
            failures += 1
            print(f"{cfg.name:<18}FAILED: {result}")
            continue
        tracking = result.metrics.tracking
        pe = result.pe
        print(
            f"{cfg.name:<18}{_fmt(tracking.pos_rmse):>11}{_fmt(tracking.vel_rmse):>11}"
            f"{_fmt(tracking.att_rmse):>11}"
            f"{(tracking.convergence_time or float('nan')):>9.2f}"
            f"{_fmt(result.metrics.m_residual_var):>11}"
            f"{_fmt(pe.min_mu if pe is not None else None):>11}"
        )
    print(f"\nOutputs in {args.out}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(asyncio.run(main()))
