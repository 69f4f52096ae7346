#!/usr/bin/env python3
"""
Tabulate the bearing excitation margin against the window length.

Runs the excitation audit on one scenario for a range of window lengths and
prints the minimum margin for each, so a window that certifies the trajectory
can be picked before a long run.

Usage:
  python scripts/sweep_pe_windows.py [--preset paper-fig3-clean] [--t-end 20]
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

REPO_ROOT = Path(__file__).resolve().parent.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from riccati_nav import HorizonError, load_scenario, pe_audit  # noqa: E402
from riccati_nav.const import PE_THRESHOLD, PRESET_REFERENCE_CLEAN  # noqa: E402
from riccati_nav.scenario import PRESETS  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("config", nargs="?", type=Path)
    parser.add_argument("--preset", choices=sorted(PRESETS), default=PRESET_REFERENCE_CLEAN)
    parser.add_argument("--t-end", type=float, default=20.0)
    parser.add_argument("--step", type=float, default=0.5)
    parser.add_argument(
        "--deltas", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    )
    args = parser.parse_args()
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    cfg = load_scenario(args.config, preset=args.preset, t_end=args.t_end)
    print(f"Scenario {cfg.name}, horizon {cfg.t_end:g} s, threshold {PE_THRESHOLD:g}")
    print(f"{'delta':>8}{'windows':>9}{'min mu':>13}{'median mu':>13}  certified")
    for delta in args.deltas:
        try:
            sweep = pe_audit(cfg, delta, args.step)
        except HorizonError as err:
            print(f"{delta:>8.2f}  skipped: {err}")
            continue
        print(
            f"{delta:>8.2f}{sweep.mu.size:>9d}{sweep.min_mu:>13.4e}"
            f"{float(np.median(sweep.mu)):>13.4e}  {'yes' if sweep.satisfied else 'no'}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
