"""Wall-time scaling of precoder construction and log-log slope fits."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .config import ExperimentConfig
from .precoding import Scheme, precoder_cost_probe

__all__ = ["BenchRow", "BenchResult", "fit_loglog_slope", "run_complexity_bench", "write_bench_csv"]


@dataclass(frozen=True)
class BenchRow:
    scheme: str
    n_users: int
    n_tx: int
    repetitions: int
    median_time_s: float


@dataclass(frozen=True)
class BenchResult:
    rows: tuple[BenchRow, ...]
    slopes: dict  # scheme -> fitted log-log slope of time vs n_users

    def times(self, scheme: str) -> dict[int, float]:
        return {r.n_users: r.median_time_s for r in self.rows if r.scheme == scheme}


def fit_loglog_slope(sizes, times) -> float:
    """Least-squares slope of log(time) against log(size)."""
    sizes = np.asarray(sizes, dtype=float)
    times = np.asarray(times, dtype=float)
    if sizes.size < 2:
        raise ValueError("need at least two points to fit a slope")
    return float(np.polyfit(np.log(sizes), np.log(times), 1)[0])


def run_complexity_bench(cfg: ExperimentConfig) -> BenchResult:
    """Probe both schemes over the configured user-count grid.

    The antenna count tracks the user count via ``bench_tx_ratio`` so the
    user dimension drives the scaling.
    """
    rows: list[BenchRow] = []
    slopes: dict[str, float] = {}
    for scheme in (Scheme.MF, Scheme.ZF):
        sizes, medians = [], []
        for n_users in cfg.bench_users:
            n_tx = cfg.bench_tx_ratio * n_users
            median = precoder_cost_probe(
                scheme, n_tx, n_users, repetitions=cfg.bench_repetitions,
                seed=cfg.master_seed & 0xFFFFFFFF,
            )
            rows.append(BenchRow(scheme.value, n_users, n_tx, cfg.bench_repetitions, median))
            sizes.append(n_users)
            medians.append(median)
        slopes[scheme.value] = fit_loglog_slope(sizes, medians)
    return BenchResult(tuple(rows), slopes)


def write_bench_csv(result: BenchResult, path) -> None:
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    lines = [f"# generated_at={stamp}"]
    for scheme, slope in sorted(result.slopes.items()):
        lines.append(f"# loglog_slope_{scheme}={slope:.4f}")
    lines.append("scheme,n_users,n_tx,repetitions,median_time_s")
    for row in result.rows:
        lines.append(
            f"{row.scheme},{row.n_users},{row.n_tx},{row.repetitions},"
            f"{row.median_time_s:.6e}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
