"""Parallel-beam Radon transform and unfiltered backprojection.

A sinogram holds ``f(rho_i, theta_j)`` with ``rho_i = -1 + (i + 0.5) * 2/n_rho``
and ``theta_j = j * pi / n_theta``; rows are rho, columns theta. Objects must
live inside the unit disk so every line through them is covered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .grids import ImageGrid, _parse_dims, _split_header, _write_atomic, pixel_centers

RSIN_MAGIC = "RSIN1"


@dataclass(frozen=True)
class Sinogram:
    data: np.ndarray  # shape (n_rho, n_theta)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"Sinogram needs a non-empty 2D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Sinogram values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n_rho(self) -> int:
        return self.data.shape[0]

    @property
    def n_theta(self) -> int:
        return self.data.shape[1]

    @property
    def rho_samples(self) -> np.ndarray:
        return pixel_centers(self.n_rho)

    @property
    def theta_samples(self) -> np.ndarray:
        return np.arange(self.n_theta) * (math.pi / self.n_theta)

    @property
    def rho_spacing(self) -> float:
        return 2.0 / self.n_rho

    def __eq__(self, other):
        if not isinstance(other, Sinogram):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    __hash__ = None


def sample_bilinear(img: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a pixel-centered image at physical points.

    Beyond the outermost pixel centers the image ramps to zero over half a
    pixel (zero padding); points outside [-1, 1]^2 read exactly zero.
    """
    n = img.shape[0]
    padded = np.zeros((n + 2, n + 2))
    padded[1:-1, 1:-1] = img
    # continuous index into the padded array
    u = (x + 1.0) * (n / 2.0) - 0.5 + 1.0
    v = (y + 1.0) * (n / 2.0) - 0.5 + 1.0
    inside = (np.abs(x) <= 1.0) & (np.abs(y) <= 1.0)
    u = np.where(inside, u, 0.0)
    v = np.where(inside, v, 0.0)
    i0 = np.clip(np.floor(u).astype(np.intp), 0, n)
    j0 = np.clip(np.floor(v).astype(np.intp), 0, n)
    fu = u - i0
    fv = v - j0
    val = (
        (1 - fv) * ((1 - fu) * padded[j0, i0] + fu * padded[j0, i0 + 1])
        + fv * ((1 - fu) * padded[j0 + 1, i0] + fu * padded[j0 + 1, i0 + 1])
    )
    return np.where(inside, val, 0.0)


def forward_radon(img: ImageGrid, n_rho: int, n_theta: int) -> Sinogram:
    """Line integrals of ``img`` along ``x cos(theta) + y sin(theta) = rho``.

    Each line is sampled with step ``h = 1/n`` over ``s in [-sqrt(2), sqrt(2)]``
    at points ``(rho cos - s sin, rho sin + s cos)`` and summed times ``h``.
    """
    if n_rho < 1 or n_theta < 1:
        raise ValueError("n_rho and n_theta must be >= 1")
    h = 1.0 / img.n
    half = math.ceil(math.sqrt(2.0) / h)
    s = np.arange(-half, half + 1) * h
    rho = pixel_centers(n_rho)
    thetas = np.arange(n_theta) * (math.pi / n_theta)
    out = np.empty((n_rho, n_theta))
    for j, theta in enumerate(thetas):
        c, sn = math.cos(theta), math.sin(theta)
        x = rho[:, None] * c - s[None, :] * sn
        y = rho[:, None] * sn + s[None, :] * c
        out[:, j] = sample_bilinear(img.data, x, y).sum(axis=1) * h
    return Sinogram(out)


def backproject(sino: Sinogram, n: int) -> ImageGrid:
    """``G(x, y) = (pi / n_theta) * sum_j f(x cos theta_j + y sin theta_j, theta_j)``.

    Values between rho samples are linearly interpolated; outside the sampled
    range they are zero.
    """
    c = pixel_centers(n)
    x, y = np.meshgrid(c, c)
    rho = sino.rho_samples
    out = np.zeros((n, n))
    for j, theta in enumerate(sino.theta_samples):
        t = x * math.cos(theta) + y * math.sin(theta)
        out += np.interp(t, rho, sino.data[:, j], left=0.0, right=0.0)
    return ImageGrid(out * (math.pi / sino.n_theta))


def encode_rsin(sino: Sinogram) -> bytes:
    header = f"{RSIN_MAGIC} {sino.n_rho} {sino.n_theta}\n".encode("ascii")
    return header + sino.data.astype("<f8").tobytes()


def decode_rsin(raw: bytes) -> Sinogram:
    if not raw.startswith(RSIN_MAGIC.encode()):
        raise FormatError("not an rsin file")
    tokens, pos = _split_header(raw, 3)
    n_rho, n_theta = _parse_dims(tokens[1:], "rsin")
    payload = raw[pos:]
    if len(payload) != n_rho * n_theta * 8:
        raise FormatError(f"rsin payload has {len(payload)} bytes, expected {n_rho * n_theta * 8}")
    try:
        return Sinogram(np.frombuffer(payload, dtype="<f8").reshape(n_rho, n_theta))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_sinogram(sino: Sinogram, path) -> None:
    _write_atomic(path, encode_rsin(sino))


def read_sinogram(path) -> Sinogram:
    with open(path, "rb") as fh:
        return decode_rsin(fh.read())
