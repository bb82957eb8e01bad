"""8-bit grayscale image helpers: PGM I/O, a synthetic test card, distances."""

from __future__ import annotations

import numpy as np

__all__ = [
    "read_pgm",
    "write_pgm",
    "synthetic_test_image",
    "image_distance",
    "to_uint8",
]


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM file into a 2-D uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields: list[bytes] = []
    pos = 0
    # Header: magic, width, height, maxval, separated by whitespace/comments.
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    if fields[0] != b"P5":
        raise ValueError(f"{path!s}: not a binary PGM (magic {fields[0]!r})")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if not 0 < maxval <= 255:
        raise ValueError(f"{path!s}: only 8-bit PGM supported (maxval {maxval})")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    if pixels.size != width * height:
        raise ValueError(f"{path!s}: truncated pixel data")
    return pixels.reshape(height, width).copy()


def write_pgm(path, image) -> None:
    """Write a 2-D array as a binary (P5) 8-bit PGM file."""
    img = to_uint8(image)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def to_uint8(image) -> np.ndarray:
    """Round and clip to the 8-bit pixel range."""
    arr = np.asarray(image)
    if arr.dtype == np.uint8:
        return arr
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


def synthetic_test_image(width: int = 128, height: int = 128) -> np.ndarray:
    """Deterministic test card: gradient, a disk, a dark box, texture bands.

    Pure arithmetic in the pixel coordinates, so every run and platform sees
    the same image and the repository ships no dataset.
    """
    if width < 8 or height < 8:
        raise ValueError("test image must be at least 8x8")
    x = np.linspace(0.0, 1.0, width)[None, :]
    y = np.linspace(0.0, 1.0, height)[:, None]

    img = 32.0 + 180.0 * x + 0.0 * y  # horizontal gradient base

    # Sinusoidal texture bands along the bottom strip.
    bands = (y >= 0.70) & (y <= 0.92)
    img = np.where(bands, 128.0 + 96.0 * np.sin(2 * np.pi * (9.0 * x + 4.0 * y)), img)

    # Bright disk upper left.
    disk = (x - 0.30) ** 2 + (y - 0.32) ** 2 <= 0.17**2
    img = np.where(disk, 235.0, img)

    # Dark rectangle upper right.
    box = (x >= 0.58) & (x <= 0.88) & (y >= 0.12) & (y <= 0.40)
    img = np.where(box, 20.0, img)

    return to_uint8(img)


def image_distance(u, v) -> float:
    """Euclidean norm of the pixel difference on the [0, 1] intensity scale.

    All error levels, bias levels, and contraction thresholds use this norm,
    which keeps them comparable across image resolutions.
    """
    a = np.asarray(u, dtype=float)
    b = np.asarray(v, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm((a - b).ravel() / 255.0))
