"""Command-line front end: snr-sweep, csi-sweep, bench, reconstruct."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import run_complexity_bench, write_bench_csv
from .channel import SeedSpec, draw_channel_set
from .config import ConfigError, build_operator, load_config
from .inference import apply_operator
from .link import QamParams, ber_from_sinr, link_budget
from .metrics import metric_report
from .images import write_pgm
from .precoding import mf_precoder, zf_precoder
from .sweeps import run_csi_error_sweep, run_snr_sweep
from .transceiver import QamConstellation, split_bit_planes, transmit_frame

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semimo",
        description="Link-level downlink lab: precoding sweeps, scaling bench, "
        "single-image transport.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("snr-sweep", "sweep transmit SNR under perfect CSI"),
        ("csi-sweep", "sweep CSI error variance at the fixed SNR"),
        ("bench", "time precoder construction across sizes"),
        ("reconstruct", "send one image end to end and score it"),
    ]:
        cmd = sub.add_parser(name, help=doc)
        cmd.add_argument("--config", type=Path, default=None, help="key = value file")
        cmd.add_argument("--out", type=Path, default=None, help="output path")
        cmd.add_argument("--seed", type=int, default=None, help="master seed override")
        cmd.add_argument("--workers", type=int, default=None, help="parallel cells")
    return parser


def _reconstruct(cfg, out_path: Path) -> None:
    image = cfg.source_image()
    source = split_bit_planes(image)
    err_db = cfg.recon_err_var_db
    err_var = 0.0 if err_db == float("-inf") else 10.0 ** (err_db / 10.0)
    channel = draw_channel_set(cfg.n_tx, cfg.n_users, err_var, SeedSpec(cfg.master_seed))
    build = zf_precoder if cfg.recon_scheme == "zf" else mf_precoder
    precoder = build(channel.h_known)
    tx_power = cfg.tx_power(cfg.fixed_snr_db)
    result = transmit_frame(
        source, channel, precoder, tx_power, cfg.noise_var,
        QamConstellation.square(cfg.qam_order), SeedSpec(cfg.master_seed),
        equalize_with_known_gain=cfg.equalize_with_known_gain,
    )
    noisy = result.image()
    restored = apply_operator(build_operator(cfg.operator), noisy)

    budget = link_budget(channel, precoder, tx_power, cfg.noise_var)
    bers = ber_from_sinr(budget.sinr, QamParams(cfg.qam_order))
    received_path = out_path.with_name(out_path.stem + "_received" + out_path.suffix)
    write_pgm(received_path, noisy)
    write_pgm(out_path, restored)

    print(f"scheme={cfg.recon_scheme} snr_db={cfg.fixed_snr_db} err_var={err_var}")
    print(f"analytic sinr per user: {' '.join(f'{g:.3f}' for g in budget.sinr)}")
    print(f"analytic ber per stream: {' '.join(f'{b:.3e}' for b in bers)}")
    print(f"empirical ber per stream: {' '.join(f'{b:.3e}' for b in result.ber)}")
    for label, img in (("identity", noisy), ("operator", restored)):
        rep = metric_report(img, image)
        print(
            f"{label}: mae={rep.mae:.5f} neg_psnr={rep.neg_psnr:.3f} "
            f"one_minus_ssim={rep.one_minus_ssim:.5f}"
        )
    print(f"wrote {received_path} and {out_path}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config, master_seed=args.seed, workers=args.workers
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    configured = Path(cfg.output_path) if cfg.output_path else None
    out = args.out or configured or Path(f"{args.command.replace('-', '_')}.csv")
    try:
        if args.command == "snr-sweep":
            run_snr_sweep(cfg, out)
            print(f"wrote {out}")
        elif args.command == "csi-sweep":
            run_csi_error_sweep(cfg, out)
            print(f"wrote {out}")
        elif args.command == "bench":
            result = run_complexity_bench(cfg)
            write_bench_csv(result, out)
            for scheme, slope in sorted(result.slopes.items()):
                print(f"{scheme}: log-log slope {slope:.3f}")
            print(f"wrote {out}")
        elif args.command == "reconstruct":
            out = args.out or configured or Path("reconstructed.pgm")
            _reconstruct(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failures map to a distinct exit code
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
