#!/usr/bin/env python3
"""Run both sweep cases with default settings and write the CSVs.

Produces snr_sweep.csv (perfect CSI, SNR on the x axis) and csi_sweep.csv
(15 dB SNR, CSI error variance on the x axis), each with MF and ZF rows for
raw and operator-reconstructed images. Pass a config file to override any
default, e.g.:

    python scripts/run_sweeps.py --config my.cfg --outdir results/
"""

import argparse
import sys
import time
from pathlib import Path

from semimo.config import ConfigError, load_config
from semimo.sweeps import run_csi_error_sweep, run_snr_sweep


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--outdir", type=Path, default=Path("."))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()

    try:
        cfg = load_config(args.config, master_seed=args.seed, workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    args.outdir.mkdir(parents=True, exist_ok=True)
    for name, runner in [("snr_sweep", run_snr_sweep), ("csi_sweep", run_csi_error_sweep)]:
        out = args.outdir / f"{name}.csv"
        start = time.perf_counter()
        rows = runner(cfg, out)
        print(f"{name}: {len(rows)} rows -> {out} ({time.perf_counter() - start:.1f}s)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
