"""Contraction-style reconstruction operators and the performance bound algebra."""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter

from .images import image_distance, read_pgm, write_pgm
from .link import QamParams

__all__ = [
    "OperatorError",
    "IdentityOperator",
    "AffineContraction",
    "SmoothingDenoiser",
    "ExternalCommandOperator",
    "compose",
    "apply_operator",
    "estimate_rho",
    "estimate_bias",
    "InferenceProfile",
    "semantic_bound",
    "identity_bound",
    "inferiority_threshold",
    "sinr_sensitivity",
]


class OperatorError(RuntimeError):
    """An operator could not produce a usable reconstruction."""


class IdentityOperator:
    """Passes the image through untouched: 1-Lipschitz, zero bias."""

    def __call__(self, image: np.ndarray) -> np.ndarray:
        return np.array(image, dtype=float)


class AffineContraction:
    """Pulls every input toward a fixed anchor image by a known factor.

    G(u) = anchor + factor * (u - anchor). Exactly ``factor``-Lipschitz with a
    closed-form bias, which makes it the calibration operator for bound
    checks.
    """

    def __init__(self, anchor, factor: float):
        if not 0.0 <= factor <= 1.0:
            raise ValueError(f"factor must lie in [0, 1], got {factor}")
        self.anchor = np.asarray(anchor, dtype=float)
        self.factor = float(factor)

    def __call__(self, image: np.ndarray) -> np.ndarray:
        u = np.asarray(image, dtype=float)
        if u.shape != self.anchor.shape:
            raise OperatorError(
                f"image shape {u.shape} != anchor shape {self.anchor.shape}"
            )
        return self.anchor + self.factor * (u - self.anchor)

    def bias_at(self, clean, error_level: float = 0.0) -> float:
        """Closed-form bias: (1 - factor)*||clean - anchor|| + factor*error_level."""
        return (1.0 - self.factor) * image_distance(clean, self.anchor) + (
            self.factor * error_level
        )


class SmoothingDenoiser:
    """Blends the input with its local box average.

    Output (u + strength * box(u)) / (1 + strength), the closed-form minimizer
    of ||v - u||^2 / 2 + (strength / 2) * ||v - box(u)||^2: a quadratic prior
    pulling each pixel toward its neighborhood mean. With replicated edges the
    box kernel is doubly stochastic, so constants pass through unchanged and
    the operator norm never exceeds 1.
    """

    def __init__(self, strength: float, size: int = 3):
        if strength < 0:
            raise ValueError(f"strength must be >= 0, got {strength}")
        if size < 2:
            raise ValueError(f"kernel size must be >= 2, got {size}")
        self.strength = float(strength)
        self.size = int(size)

    def __call__(self, image: np.ndarray) -> np.ndarray:
        u = np.asarray(image, dtype=float)
        blurred = uniform_filter(u, size=self.size, mode="nearest")
        w = self.strength / (1.0 + self.strength)
        return (1.0 - w) * u + w * blurred


class ExternalCommandOperator:
    """Shells out for reconstruction.

    The command template receives ``{in}`` and ``{out}`` placeholders
    substituted with PGM paths; exit code 0 plus a readable output image
    signal success. Lets an actual restoration model run out of process.
    """

    def __init__(self, command_template: str, timeout: float = 600.0):
        if "{in}" not in command_template or "{out}" not in command_template:
            raise ValueError("command template must contain {in} and {out}")
        self.command_template = command_template
        self.timeout = timeout

    def __call__(self, image: np.ndarray) -> np.ndarray:
        with tempfile.TemporaryDirectory(prefix="semimo-op-") as tmp:
            in_path = Path(tmp) / "in.pgm"
            out_path = Path(tmp) / "out.pgm"
            write_pgm(in_path, image)
            cmd = self.command_template.format(**{"in": in_path, "out": out_path})
            try:
                proc = subprocess.run(
                    shlex.split(cmd),
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise OperatorError(f"external command failed to run: {exc}") from exc
            if proc.returncode != 0:
                raise OperatorError(
                    f"external command exited {proc.returncode}: "
                    f"{proc.stderr.strip()[:500]}"
                )
            try:
                result = read_pgm(out_path)
            except (OSError, ValueError) as exc:
                raise OperatorError(f"unusable output image: {exc}") from exc
        return result.astype(float)


def compose(*operators):
    """Chain operators left to right: compose(f, g)(x) applies f first."""

    def chained(image):
        out = image
        for op in operators:
            out = op(out)
        return out

    return chained


def apply_operator(op, image) -> np.ndarray:
    """Run a reconstruction operator on a float copy and sanity-check the output."""
    x = np.asarray(image, dtype=float)
    out = np.asarray(op(x), dtype=float)
    if out.shape != x.shape:
        raise OperatorError(f"operator changed image shape {x.shape} -> {out.shape}")
    if not np.all(np.isfinite(out)):
        raise OperatorError("operator produced non-finite pixels")
    return out


def _probe_direction(kind: int, shape, rng: np.random.Generator) -> np.ndarray:
    if kind == 0:  # white
        return rng.standard_normal(shape)
    if kind == 1:  # constant: the worst case for averaging kernels
        return float(rng.choice((-1.0, 1.0))) * np.ones(shape)
    # smooth low-frequency field
    return uniform_filter(rng.standard_normal(shape), size=9, mode="nearest")


def estimate_rho(
    op,
    probe_images,
    perturbation_scale: float,
    n_pairs: int = 120,
    seed: int = 0,
) -> float:
    """Largest observed ||G(u) - G(v)|| / ||u - v|| over perturbation pairs.

    White, constant, and smooth perturbation directions are cycled around
    each probe image; the result is a sampled lower bound on the Lipschitz
    constant and serves as the working contraction factor.
    """
    probes = [np.asarray(p, dtype=float) for p in probe_images]
    if not probes:
        raise ValueError("need at least one probe image")
    if n_pairs < 100:
        raise ValueError(f"need at least 100 probe pairs, got {n_pairs}")
    if perturbation_scale <= 0:
        raise ValueError("perturbation_scale must be > 0")
    rng = np.random.default_rng(seed)
    best = 0.0
    for i in range(n_pairs):
        u = probes[i % len(probes)]
        direction = _probe_direction(i % 3, u.shape, rng)
        denom = np.linalg.norm(direction.ravel()) / 255.0
        if denom == 0.0:
            continue
        v = u + direction * (perturbation_scale / denom)
        du = image_distance(u, v)
        if du == 0.0:
            continue
        best = max(best, image_distance(apply_operator(op, u), apply_operator(op, v)) / du)
    return best


def estimate_bias(
    op,
    clean_images,
    error_level: float,
    n_trials: int = 100,
    seed: int = 0,
) -> float:
    """Mean ||G(s + e) - s|| over perturbations e with ||e|| = error_level.

    Measures how far the operator lands from the clean source when the input
    is already within ``error_level`` of it; error_level 0 probes the pure
    reconstruction bias.
    """
    images = [np.asarray(s, dtype=float) for s in clean_images]
    if not images:
        raise ValueError("need at least one clean image")
    if error_level < 0:
        raise ValueError("error_level must be >= 0")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rng = np.random.default_rng(seed)
    total = 0.0
    for i in range(n_trials):
        s = images[i % len(images)]
        if error_level > 0:
            direction = rng.standard_normal(s.shape)
            direction *= error_level / (np.linalg.norm(direction.ravel()) / 255.0)
            x = s + direction
        else:
            x = s
        total += image_distance(apply_operator(op, x), s)
    return total / n_trials


@dataclass(frozen=True)
class InferenceProfile:
    """Everything the bound calculator needs about one receiver chain.

    ``rho`` is the (measured or declared) contraction factor, ``epsilon`` the
    reference error level, ``delta_eps`` the reconstruction bias at that
    level, and ``metric_lipschitz`` the metric's Lipschitz constant in the
    scaled Euclidean image norm.
    """

    rho: float
    epsilon: float
    delta_eps: float
    metric_lipschitz: float

    def __post_init__(self) -> None:
        values = (self.rho, self.epsilon, self.delta_eps, self.metric_lipschitz)
        if not all(np.isfinite(v) for v in values):
            raise ValueError(f"profile fields must be finite, got {values}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        if self.epsilon < 0 or self.delta_eps < 0:
            raise ValueError("epsilon and delta_eps must be >= 0")
        if self.metric_lipschitz <= 0:
            raise ValueError("metric_lipschitz must be > 0")


def semantic_bound(
    profile: InferenceProfile, metric_floor: float, expected_err: float
) -> float:
    """Upper bound on the expected metric after contraction reconstruction.

    metric_floor + rho * l_M * (expected_err + epsilon) + l_M * delta_eps,
    where expected_err is E||received - clean|| in the scaled image norm.
    """
    if metric_floor < 0 or expected_err < 0:
        raise ValueError("metric_floor and expected_err must be >= 0")
    l_m = profile.metric_lipschitz
    return (
        metric_floor
        + profile.rho * l_m * (expected_err + profile.epsilon)
        + l_m * profile.delta_eps
    )


def identity_bound(
    metric_floor: float, metric_lipschitz: float, expected_err: float
) -> float:
    """Upper bound on the expected metric with no reconstruction at all."""
    if metric_floor < 0 or expected_err < 0:
        raise ValueError("metric_floor and expected_err must be >= 0")
    if metric_lipschitz <= 0:
        raise ValueError("metric_lipschitz must be > 0")
    return metric_floor + metric_lipschitz * expected_err


def inferiority_threshold(profile: InferenceProfile) -> float:
    """Error level below which plain pass-through beats the reconstruction.

    rho * epsilon / (1 - rho) + delta_eps / (1 - rho): when the expected
    received error drops under this value, the bias the operator injects
    outweighs the noise it removes.
    """
    if profile.rho >= 1.0:
        raise ValueError(
            f"threshold undefined for rho={profile.rho}: not a contraction"
        )
    return (profile.rho * profile.epsilon + profile.delta_eps) / (1.0 - profile.rho)


def sinr_sensitivity(
    profile: InferenceProfile, qam: QamParams, sinr: float, stream_index: int
) -> float:
    """Slope of the reconstruction bound with respect to one stream's SINR.

    For the stream carrying weight 2^(stream_index - 1):
    -rho * l_M * (2^(k-1) * alpha / (2 * sqrt(2 pi) * beta))
        * exp(-beta^2 * sinr / 2) / sqrt(sinr).
    Always negative and attenuated linearly by rho.
    """
    if sinr <= 0:
        raise ValueError(f"sinr must be > 0, got {sinr}")
    if stream_index < 1:
        raise ValueError(f"stream_index is 1-based, got {stream_index}")
    weight = 2.0 ** (stream_index - 1)
    return (
        -profile.rho
        * profile.metric_lipschitz
        * weight
        * qam.alpha
        / (2.0 * np.sqrt(2.0 * np.pi) * qam.beta)
        * np.exp(-qam.beta**2 * sinr / 2.0)
        / np.sqrt(sinr)
    )
