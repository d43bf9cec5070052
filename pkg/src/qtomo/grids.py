"""Image grids on [-1, 1]^2, analytic phantoms, and image file I/O.

Pixel ``(row=j, col=i)`` of an ``n x n`` grid has its center at
``x_i = -1 + (i + 0.5) * 2/n``, ``y_j = -1 + (j + 0.5) * 2/n``.
Row 0 is the bottom of the extent (``y = -1``).
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import FormatError
from .spectral import is_power_of_two

RIMG_MAGIC = "RIMG1"
PGM_MAXVAL = 65535


@dataclass(frozen=True)
class ImageGrid:
    """Square real image on the fixed physical extent [-1, 1]^2."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"ImageGrid needs a non-empty square array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("ImageGrid values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def spacing(self) -> float:
        return 2.0 / self.n

    @property
    def centers(self) -> np.ndarray:
        """Pixel-center coordinates along either axis."""
        return pixel_centers(self.n)

    def __eq__(self, other):
        if not isinstance(other, ImageGrid):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    __hash__ = None


def pixel_centers(n: int) -> np.ndarray:
    return -1.0 + (np.arange(n) + 0.5) * (2.0 / n)


@dataclass(frozen=True)
class Ellipse:
    center_x: float
    center_y: float
    semi_axis_a: float
    semi_axis_b: float
    rotation: float  # radians, counter-clockwise
    intensity: float

    def contains(self, x, y):
        dx = x - self.center_x
        dy = y - self.center_y
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        u = dx * c + dy * s
        v = -dx * s + dy * c
        return (u / self.semi_axis_a) ** 2 + (v / self.semi_axis_b) ** 2 <= 1.0


@dataclass(frozen=True)
class PhantomSpec:
    """Sum of constant-intensity ellipses, all inside the unit disk."""

    ellipses: tuple

    def __post_init__(self):
        object.__setattr__(self, "ellipses", tuple(self.ellipses))
        for e in self.ellipses:
            if e.semi_axis_a <= 0 or e.semi_axis_b <= 0:
                raise ValueError(f"semi-axes must be positive: {e}")
            reach = math.hypot(e.center_x, e.center_y) + max(e.semi_axis_a, e.semi_axis_b)
            if reach > 1.0 + 1e-12:
                raise ValueError(f"ellipse leaves the unit disk: {e}")

    def rasterize(self, n: int) -> ImageGrid:
        """Sum intensities of all ellipses containing each pixel center."""
        c = pixel_centers(n)
        x, y = np.meshgrid(c, c)  # x varies along columns, y along rows
        out = np.zeros((n, n))
        for e in self.ellipses:
            out[e.contains(x, y)] += e.intensity
        return ImageGrid(out)


def _load_shepp_logan() -> PhantomSpec:
    text = resources.files("qtomo.data").joinpath("shepp_logan.csv").read_text()
    rows = csv.reader(line for line in io.StringIO(text) if not line.startswith("#"))
    ellipses = []
    for value, a, b, x0, y0, deg in rows:
        ellipses.append(
            Ellipse(float(x0), float(y0), float(a), float(b), math.radians(float(deg)), float(value))
        )
    return PhantomSpec(ellipses)


SHEPP_LOGAN = _load_shepp_logan()


def shepp_logan(n: int) -> ImageGrid:
    """Modified Shepp-Logan head phantom sampled at pixel centers (n >= 16)."""
    if n < 16:
        raise ValueError(f"shepp_logan needs n >= 16, got {n}")
    return SHEPP_LOGAN.rasterize(n)


def disk_phantom(n: int, cx: float, cy: float, r: float, v: float = 1.0) -> ImageGrid:
    """Uniform disk of value ``v``; pixels whose center is inside get ``v``."""
    if n < 2:
        raise ValueError(f"disk_phantom needs n >= 2, got {n}")
    if r <= 0:
        raise ValueError("radius must be positive")
    if abs(cx) + r > 1.0 or abs(cy) + r > 1.0:
        raise ValueError("disk exceeds the [-1, 1]^2 extent")
    c = pixel_centers(n)
    x, y = np.meshgrid(c, c)
    inside = (x - cx) ** 2 + (y - cy) ** 2 <= r * r
    return ImageGrid(np.where(inside, float(v), 0.0))


def gaussian_blob(n: int, sigma: float = 0.15, cx: float = 0.0, cy: float = 0.0) -> ImageGrid:
    """Smooth test object: isotropic Gaussian, effectively zero at the unit circle."""
    c = pixel_centers(n)
    x, y = np.meshgrid(c, c)
    return ImageGrid(np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma * sigma)))


# --- file I/O -------------------------------------------------------------


def _write_atomic(path, payload: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def encode_rimg(img: ImageGrid) -> bytes:
    n = img.n
    return f"{RIMG_MAGIC} {n} {n}\n".encode("ascii") + img.data.astype("<f8").tobytes()


def quantize_pgm16(data: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 65535] and round; a constant image maps to zeros."""
    lo, hi = float(data.min()), float(data.max())
    if hi == lo:
        return np.zeros(data.shape, dtype=np.uint16)
    scaled = (data - lo) / (hi - lo) * PGM_MAXVAL
    return np.rint(scaled).astype(np.uint16)


def encode_pgm16(img: ImageGrid) -> bytes:
    n = img.n
    header = f"P5\n{n} {n}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + quantize_pgm16(img.data).astype(">u2").tobytes()


def write_image(img: ImageGrid, path, format: str | None = None) -> None:
    """Write ``img`` as ``rimg`` (lossless float64) or ``pgm16``.

    The format defaults to the file extension (``.pgm`` -> pgm16, else rimg).
    """
    if format is None:
        format = "pgm16" if str(path).lower().endswith(".pgm") else "rimg"
    if format == "rimg":
        payload = encode_rimg(img)
    elif format == "pgm16":
        payload = encode_pgm16(img)
    else:
        raise ValueError(f"unknown image format {format!r}")
    _write_atomic(path, payload)


def _split_header(raw: bytes, n_fields: int):
    """Split ``n_fields`` whitespace-separated ASCII tokens off the front of ``raw``."""
    tokens, pos = [], 0
    while len(tokens) < n_fields:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated header")
        tokens.append(raw[start:pos].decode("ascii", errors="replace"))
    if pos >= len(raw) or not raw[pos : pos + 1].isspace():
        raise FormatError("header not terminated")
    return tokens, pos + 1


def _parse_dims(tokens, what):
    try:
        dims = [int(t) for t in tokens]
    except ValueError as exc:
        raise FormatError(f"malformed {what} header: {tokens}") from exc
    if any(d < 1 for d in dims):
        raise FormatError(f"non-positive dimension in {what} header: {dims}")
    return dims


def decode_image(raw: bytes) -> ImageGrid:
    if raw.startswith(RIMG_MAGIC.encode()):
        tokens, pos = _split_header(raw, 3)
        rows, cols = _parse_dims(tokens[1:], "rimg")
        if rows != cols:
            raise FormatError(f"rimg must be square, got {rows}x{cols}")
        expected = rows * cols * 8
        payload = raw[pos:]
        if len(payload) != expected:
            raise FormatError(f"rimg payload has {len(payload)} bytes, expected {expected}")
        data = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
    elif raw.startswith(b"P5"):
        tokens, pos = _split_header(raw, 4)
        width, height, maxval = _parse_dims(tokens[1:], "pgm")
        if width != height:
            raise FormatError(f"pgm must be square, got {width}x{height}")
        if maxval != PGM_MAXVAL:
            raise FormatError(f"only 16-bit pgm (maxval {PGM_MAXVAL}) is supported, got {maxval}")
        payload = raw[pos:]
        expected = width * height * 2
        if len(payload) != expected:
            raise FormatError(f"pgm payload has {len(payload)} bytes, expected {expected}")
        data = np.frombuffer(payload, dtype=">u2").reshape(height, width) / PGM_MAXVAL
    else:
        raise FormatError("unrecognized image magic")
    if not is_power_of_two(data.shape[0]):
        warnings.warn(f"image side {data.shape[0]} is not a power of two; quantum pipelines will reject it")
    try:
        return ImageGrid(data)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def read_image(path) -> ImageGrid:
    """Read an ``rimg`` or ``pgm16`` file (detected by magic).

    pgm16 samples come back scaled to [0, 1]; the original range is not stored.
    """
    with open(path, "rb") as fh:
        return decode_image(fh.read())
