"""Classical reconstructions: direct Fourier (slice-theorem) and filtered backprojection."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .grids import ImageGrid
from .interp import InterpolationScheme, SparseInterpMatrix, apply_interp, build_interp_matrix
from .radon import Sinogram, backproject
from .spectral import FORWARD, INVERSE, dft1d, dft2d, fftshift, origin_phase, ramp_filter, unshift

logger = logging.getLogger(__name__)


def polar_spectrum(sino: Sinogram, apply_ramp: bool = False) -> np.ndarray:
    """Centered 1D spectra of all projections, flattened radial-major.

    The spectrum is referenced to the physical origin (rho = 0) rather than
    to sample 0, so the interpolation sees the slices of the image
    spectrum that the slice theorem promises.
    """
    spec = dft1d(sino.data, FORWARD, axis=0)
    if apply_ramp:
        spec = ramp_filter(spec, axis=0)
    spec = fftshift(spec, axes=(0,)) * origin_phase(sino.n_rho)[:, None]
    return spec.ravel()


def cartesian_to_image(cart: np.ndarray, n: int) -> np.ndarray:
    """Inverse of the centering + origin phase, followed by an unnormalized inverse 2D DFT."""
    ph = np.conj(origin_phase(n))
    spec = cart.reshape(n, n) * ph[:, None] * ph[None, :]
    return dft2d(unshift(spec), INVERSE)


def fourier_slice_complex(
    sino: Sinogram,
    n: int,
    scheme="bilinear",
    apply_ramp: bool = False,
    matrix: SparseInterpMatrix | None = None,
) -> np.ndarray:
    """Complex output of the slice-theorem reconstruction, before taking the real part.

    Scaled to physical units: for an object inside the unit disk the real part
    approximates the image values, so pixel sum times pixel area is the mass.
    """
    A = matrix if matrix is not None else build_interp_matrix(n, sino.n_rho, sino.n_theta, scheme)
    cart = apply_interp(A, polar_spectrum(sino, apply_ramp))
    # slice spectrum ~ F_hat / d_rho, image DFT ~ F_hat / d_x^2
    cart = cart * (n * n / (2.0 * sino.n_rho))
    return cartesian_to_image(cart, n)


def imaginary_residual(z: np.ndarray) -> float:
    real_energy = float(np.sum(z.real ** 2))
    return float(np.sum(z.imag ** 2)) / real_energy if real_energy > 0 else 0.0


def fourier_slice_reconstruct(
    sino: Sinogram, n: int, scheme="bilinear", apply_ramp: bool = False
) -> ImageGrid:
    """Reconstruct by 1D DFT over rho, polar-to-Cartesian interpolation, inverse 2D DFT."""
    z = fourier_slice_complex(sino, n, scheme, apply_ramp)
    logger.debug("fourier-slice imaginary residual %.3e", imaginary_residual(z))
    return ImageGrid(z.real)


def filter_projections(sino: Sinogram, pad: bool = True) -> Sinogram:
    """Ramp-filter every projection, in physical units (cycles per unit length).

    With ``pad`` the projections are zero-extended to twice their length
    first, so the circular convolution does not wrap filter tails around.
    """
    data = sino.data
    if pad:
        data = np.concatenate([data, np.zeros_like(data)], axis=0)
    spec = ramp_filter(dft1d(data, FORWARD, axis=0), axis=0)
    filtered = dft1d(spec, INVERSE, axis=0).real[: sino.n_rho] / sino.rho_spacing
    return Sinogram(filtered)


def fbp_reconstruct(sino: Sinogram, n: int, pad: bool = True) -> ImageGrid:
    return backproject(filter_projections(sino, pad), n)


# --- metrics ----------------------------------------------------------------


def _pair(a, b):
    a = a.data if isinstance(a, ImageGrid) else np.asarray(a, dtype=float)
    b = b.data if isinstance(b, ImageGrid) else np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def rmse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def psnr(a, b, peak: float | None = None) -> float:
    """Peak signal-to-noise ratio in dB; ``peak`` defaults to the range of ``b``."""
    a, b = _pair(a, b)
    if peak is None:
        peak = float(b.max() - b.min())
    err = rmse(a, b)
    return math.inf if err == 0 else 20.0 * math.log10(peak / err)


def ncc(a, b) -> float:
    """Pearson correlation over pixels."""
    a, b = _pair(a, b)
    a = a.ravel() - a.mean()
    b = b.ravel() - b.mean()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    return float(a @ b / denom) if denom > 0 else 0.0


def affine_fit(src, target) -> np.ndarray:
    """Least-squares ``alpha * src + beta`` matched to ``target``."""
    s, t = _pair(src, target)
    design = np.stack([s.ravel(), np.ones(s.size)], axis=1)
    coef, *_ = np.linalg.lstsq(design, t.ravel(), rcond=None)
    return (design @ coef).reshape(s.shape)


@dataclass(frozen=True)
class ReconReport:
    method: str
    image: ImageGrid
    rmse_vs_reference: float | None = None
    psnr: float | None = None
    ncc: float | None = None
    wall_time: float = 0.0
    imag_residual: float | None = None

    def as_lines(self, with_time: bool = False):
        """key=value lines; wall time is left out unless asked for so reports stay reproducible."""
        items = [("method", self.method), ("n", self.image.n)]
        for key in ("rmse_vs_reference", "psnr", "ncc", "imag_residual"):
            val = getattr(self, key)
            if val is not None:
                items.append((key, repr(float(val))))
        if with_time:
            items.append(("wall_time", f"{self.wall_time:.6f}"))
        return [f"{k}={v}" for k, v in items]


METHODS = ("fourier-slice", "fbp", "backproject")


def reconstruct(
    method: str,
    sino: Sinogram,
    n: int,
    scheme="bilinear",
    apply_ramp: bool = False,
    reference: ImageGrid | None = None,
) -> ReconReport:
    start = time.perf_counter()
    residual = None
    if method == "fourier-slice":
        z = fourier_slice_complex(sino, n, InterpolationScheme.parse(scheme), apply_ramp)
        residual = imaginary_residual(z)
        image = ImageGrid(z.real)
    elif method == "fbp":
        image = fbp_reconstruct(sino, n)
    elif method == "backproject":
        image = backproject(sino, n)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    elapsed = time.perf_counter() - start
    metrics = {}
    if reference is not None:
        metrics = dict(
            rmse_vs_reference=rmse(image, reference),
            psnr=psnr(image, reference),
            ncc=ncc(image, reference),
        )
    return ReconReport(method, image, wall_time=elapsed, imag_residual=residual, **metrics)
