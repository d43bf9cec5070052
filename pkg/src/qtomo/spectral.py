"""Radix-2 discrete Fourier transforms, spectrum ordering and the ramp filter.

Transforms follow the usual sign convention: the forward kernel is
``exp(-2j*pi*k*n/m)``. Two normalizations are supported:

* ``"unnormalized"``: forward is the plain sum, inverse divides by ``m``.
* ``"unitary"``: both directions divide by ``sqrt(m)``; this is the QFT.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

FORWARD = "forward"
INVERSE = "inverse"
UNNORMALIZED = "unnormalized"
UNITARY = "unitary"


def is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@lru_cache(maxsize=None)
def _bit_reversal(m: int) -> np.ndarray:
    bits = m.bit_length() - 1
    idx = np.arange(m)
    rev = np.zeros(m, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=None)
def _twiddles(length: int, sign: int) -> np.ndarray:
    w = np.exp(sign * 2j * np.pi * np.arange(length // 2) / length)
    w.setflags(write=False)
    return w


def _fft_last_axis(x: np.ndarray, sign: int) -> np.ndarray:
    """Iterative decimation-in-time FFT along the last axis (unscaled)."""
    m = x.shape[-1]
    lead = x.shape[:-1]
    y = np.ascontiguousarray(x[..., _bit_reversal(m)], dtype=np.complex128)
    length = 2
    while length <= m:
        half = length // 2
        blocks = y.reshape(lead + (m // length, length))
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(length, sign)
        y = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (m,))
        length *= 2
    return y


def _check(direction: str, norm: str) -> None:
    if direction not in (FORWARD, INVERSE):
        raise ValueError(f"unknown direction {direction!r}")
    if norm not in (UNNORMALIZED, UNITARY):
        raise ValueError(f"unknown norm {norm!r}")


def dft1d(x, direction: str = FORWARD, norm: str = UNNORMALIZED, axis: int = -1) -> np.ndarray:
    """Radix-2 DFT of ``x`` along ``axis``.

    Raises ValueError when the transform length is not a power of two.
    """
    _check(direction, norm)
    x = np.asarray(x)
    m = x.shape[axis]
    if not is_power_of_two(m):
        raise ValueError(f"transform length {m} is not a power of two")
    moved = np.moveaxis(x, axis, -1)
    sign = -1 if direction == FORWARD else 1
    y = _fft_last_axis(moved, sign)
    if norm == UNITARY:
        y /= np.sqrt(m)
    elif direction == INVERSE:
        y /= m
    return np.moveaxis(y, -1, axis)


@dataclass(frozen=True)
class ComplexField:
    """2D complex array with a record of whether the zero frequency is centered."""

    data: np.ndarray
    centered: bool = False

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128)
        if arr.ndim != 2:
            raise ValueError("ComplexField needs a 2D array")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


def dft2d(field, direction: str = FORWARD, norm: str = UNNORMALIZED):
    """Separable 2D transform: rows (last axis) first, then columns.

    Accepts a ComplexField or a plain 2D array and returns the same kind.
    """
    arr = field.data if isinstance(field, ComplexField) else np.asarray(field)
    out = dft1d(arr, direction, norm, axis=1)
    out = dft1d(out, direction, norm, axis=0)
    if isinstance(field, ComplexField):
        return replace(field, data=out)
    return out


def _roll(arr: np.ndarray, sign: int, axes) -> np.ndarray:
    shifts = [sign * (arr.shape[a] // 2) for a in axes]
    return np.roll(arr, shifts, axis=axes)


def fftshift(field, axes=None):
    """Move bin 0 to index ``m // 2`` along each axis (cyclic shift)."""
    if isinstance(field, ComplexField):
        if field.centered:
            raise ValueError("field is already centered")
        return ComplexField(_roll(field.data, 1, (0, 1)), centered=True)
    arr = np.asarray(field)
    axes = tuple(range(arr.ndim)) if axes is None else axes
    return _roll(arr, 1, axes)


def unshift(field, axes=None):
    """Inverse of :func:`fftshift`."""
    if isinstance(field, ComplexField):
        if not field.centered:
            raise ValueError("field is not centered")
        return ComplexField(_roll(field.data, -1, (0, 1)), centered=False)
    arr = np.asarray(field)
    axes = tuple(range(arr.ndim)) if axes is None else axes
    return _roll(arr, -1, axes)


def signed_bins(m: int) -> np.ndarray:
    """Signed frequency index of each standard-order bin: 0..m/2, then -m/2+1..-1."""
    k = np.arange(m)
    return np.where(k <= m // 2, k, k - m)


def centered_bins(m: int) -> np.ndarray:
    """Signed frequency index of each centered-order bin: -m/2 .. m/2-1."""
    return np.arange(m) - m // 2


def origin_phase(m: int, centered: bool = True) -> np.ndarray:
    """Phase that moves the DFT origin from sample 0 to the middle of the grid.

    Sample ``i`` of a pixel-centered grid over [-1, 1) sits at offset
    ``(i - (m-1)/2)`` samples from the physical origin, so the DFT bin with
    signed index ``k`` carries an extra ``exp(-2j*pi*k*(m-1)/(2m))``.
    Multiplying a spectrum by the returned array removes that factor;
    multiplying by its conjugate puts it back.
    """
    k = centered_bins(m) if centered else signed_bins(m)
    return np.exp(2j * np.pi * k * (m - 1) / (2 * m))


def ramp_filter(sino_spectrum, axis: int = 0):
    """Multiply each bin by ``|k/m|`` along ``axis`` (standard ordering, DC -> 0).

    For a sinogram spectrum of shape ``(n_rho, n_theta)`` the default axis is
    the radial-frequency axis.
    """
    arr = sino_spectrum.data if isinstance(sino_spectrum, ComplexField) else np.asarray(sino_spectrum)
    if isinstance(sino_spectrum, ComplexField) and sino_spectrum.centered:
        raise ValueError("ramp_filter expects standard (uncentered) ordering")
    m = arr.shape[axis]
    nu = np.abs(signed_bins(m)) / m
    shape = [1] * arr.ndim
    shape[axis] = m
    out = arr * nu.reshape(shape)
    if isinstance(sino_spectrum, ComplexField):
        return replace(sino_spectrum, data=out)
    return out
