"""MF and ZF downlink precoder construction plus a wall-time cost probe."""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Scheme",
    "Precoder",
    "DegenerateChannelError",
    "GramConditionError",
    "mf_precoder",
    "zf_precoder",
    "precoder_cost_probe",
    "DEFAULT_COND_LIMIT",
]

DEFAULT_COND_LIMIT = 1e12


class Scheme(str, Enum):
    MF = "mf"
    ZF = "zf"


class DegenerateChannelError(ValueError):
    """A user's channel column is zero; no beam direction exists for it."""


class GramConditionError(ValueError):
    """The K x K Gram matrix is too ill-conditioned to invert for ZF."""


@dataclass(frozen=True)
class Precoder:
    """Unit-column-norm precoding matrix and the channel it was built from."""

    matrix_f: np.ndarray  # n_tx x n_users, ||f_k|| = 1
    scheme: Scheme
    source_channel: np.ndarray  # the h_known the precoder was derived from


def _as_channel_matrix(h_known) -> np.ndarray:
    h = np.asfortranarray(h_known, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
        raise ValueError(f"expected a 2-D channel matrix, got shape {h.shape}")
    return h


def mf_precoder(h_known) -> Precoder:
    """Matched filter: each beam points along its own user's channel.

    f_k = h_known[:, k] / ||h_known[:, k]||, built user by user; interference
    between users is ignored entirely.
    """
    h = _as_channel_matrix(h_known)
    f = np.empty(h.shape, dtype=np.complex128, order="F")
    for k in range(h.shape[1]):
        col = h[:, k]
        norm = np.sqrt(np.vdot(col, col).real)
        if norm == 0.0:
            raise DegenerateChannelError(f"channel column {k} is zero")
        np.divide(col, norm, out=f[:, k])
    f.flags.writeable = False
    return Precoder(f, Scheme.MF, h)


def zf_precoder(h_known, cond_limit: float = DEFAULT_COND_LIMIT) -> Precoder:
    """Zero forcing: each beam lies in the null space of the other users.

    Takes the columns of H (H^H H)^{-1} and renormalizes them to unit power.
    The K x K Gram matrix goes through an LU solve rather than an entrywise
    inverse, and is rejected when its condition number exceeds ``cond_limit``
    (duplicate or near-parallel user channels; nothing is regularized
    silently).
    """
    h = _as_channel_matrix(h_known)
    n_tx, n_users = h.shape
    if n_tx < n_users:
        raise ValueError(
            f"n_tx={n_tx} < n_users={n_users}: Gram matrix cannot be full rank"
        )
    gram = h.conj().T @ h
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > cond_limit:
        raise GramConditionError(
            f"Gram matrix condition number {cond:.3e} exceeds limit "
            f"{cond_limit:.3e}; user channels are (near-)linearly dependent"
        )
    inv_gram = np.linalg.solve(gram, np.eye(n_users, dtype=np.complex128))
    raw = h @ inv_gram
    f = np.asfortranarray(raw / np.linalg.norm(raw, axis=0))
    f.flags.writeable = False
    return Precoder(f, Scheme.ZF, h)


def precoder_cost_probe(
    scheme: Scheme | str,
    n_tx: int,
    n_users: int,
    repetitions: int = 100,
    seed: int = 0,
) -> float:
    """Median wall-clock seconds to construct one precoder of the given size.

    Times construction only: the channel is drawn once outside the loop and a
    warm-up build runs before measurement starts.
    """
    if n_tx < 1 or n_users < 1:
        raise ValueError("sizes must be >= 1")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    build = mf_precoder if Scheme(scheme) is Scheme.MF else zf_precoder
    rng = np.random.default_rng(seed)
    h = np.asfortranarray(
        (rng.standard_normal((n_tx, n_users)) + 1j * rng.standard_normal((n_tx, n_users)))
        * np.sqrt(0.5 / n_tx)
    )
    build(h)
    samples = np.empty(repetitions)
    for i in range(repetitions):
        start = time.perf_counter()
        build(h)
        samples[i] = time.perf_counter() - start
    return float(np.median(samples))
