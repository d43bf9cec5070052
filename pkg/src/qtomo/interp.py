"""Sparse polar-to-Cartesian interpolation of centered spectra.

Polar sources are the 1D spectra of the sinogram columns: radial bin
``m in [-n_rho/2, n_rho/2)`` (centered order) at angle ``theta_j = j*pi/n_theta``.
Cartesian targets are the centered bins ``(k_x, k_y) in [-n/2, n/2)^2`` of
an ``n x n`` image spectrum. Both grids span a physical extent of 2, so one
radial bin and one Cartesian bin are the same frequency step and no extra
scaling enters the geometry.

Row ``ky_idx * n + kx_idx`` of the matrix is a Cartesian target; column
``m_idx * n_theta + j`` is a polar source.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError

logger = logging.getLogger(__name__)

_SNAP = 1e-9


class InterpolationScheme(enum.Enum):
    NEAREST = "nearest"
    SIMPLEX = "simplex"
    BILINEAR = "bilinear"

    @property
    def sparsity(self) -> int:
        return {"nearest": 1, "simplex": 3, "bilinear": 4}[self.value]

    @classmethod
    def parse(cls, value) -> "InterpolationScheme":
        if isinstance(value, cls):
            return value
        aliases = {"nn": "nearest", "nearest-neighbor": "nearest", "nearest_neighbor": "nearest"}
        return cls(aliases.get(str(value).lower(), str(value).lower()))


@dataclass(frozen=True, eq=False)
class SparseInterpMatrix:
    """Row-sparse real matrix in CSR layout plus the grids it maps between."""

    n: int
    n_rho: int
    n_theta: int
    scheme: InterpolationScheme
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    max_radius: float = field(default=0.0)

    @property
    def n_rows(self) -> int:
        return self.n * self.n

    @property
    def n_cols(self) -> int:
        return self.n_rho * self.n_theta

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def delta_theta(self) -> float:
        return math.pi / self.n_theta

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=self.shape)

    def row(self, i: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return list(zip(self.indices[lo:hi].tolist(), self.weights[lo:hi].tolist()))

    def row_nnz(self) -> np.ndarray:
        return np.diff(self.indptr)

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def triplets(self):
        """``(row, col, weight)`` sorted by row then column."""
        rows = np.repeat(np.arange(self.n_rows), self.row_nnz())
        return zip(rows.tolist(), self.indices.tolist(), self.weights.tolist())

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            for r, c, w in self.triplets():
                fh.write(f"{r} {c} {w!r}\n")


def _snap(frac: np.ndarray, base: np.ndarray):
    """Round fractional parts within ``_SNAP`` of 0 or 1 onto the grid node."""
    up = frac > 1.0 - _SNAP
    base = np.where(up, base + 1, base)
    frac = np.where(up | (frac < _SNAP), 0.0, frac)
    return frac, base


def cartesian_to_folded_polar(kx: np.ndarray, ky: np.ndarray):
    """Polar coordinates with the angle folded into [0, pi).

    Angles in [pi, 2*pi) are reflected by pi with the radius negated, since a
    half-range sinogram only holds ``theta`` in [0, pi) and the projection
    spectrum obeys ``f(-k, theta) = f(k, theta + pi)``.
    """
    radius = np.hypot(kx, ky)
    theta = np.arctan2(ky, kx)
    flip = (theta < 0) | (theta >= math.pi)
    theta = np.where(theta < 0, theta + math.pi, theta)
    theta = np.where(theta >= math.pi, theta - math.pi, theta)
    k = np.where(flip, -radius, radius)
    return k, theta, radius


def polar_weights(k, theta, n_theta: int, scheme="bilinear"):
    """Interpolation nodes for points ``(k, theta)`` with theta in [0, pi).

    ``k`` is in radial-bin units. Returns a list of ``(m, j, w)`` arrays, one
    per stencil corner, with ``j`` already wrapped into ``[0, n_theta)``.
    Weights may be zero where a corner is unused.
    """
    scheme = InterpolationScheme.parse(scheme)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    tpos = theta / (math.pi / n_theta)
    jl = np.floor(tpos).astype(np.intp)
    w_t, jl = _snap(tpos - jl, jl)
    ml = np.floor(k).astype(np.intp)
    w_k, ml = _snap(k - ml, ml)
    # node one step up only matters when its weight is nonzero
    jh = np.where(w_t > 0, jl + 1, jl)
    mh = np.where(w_k > 0, ml + 1, ml)

    if scheme is InterpolationScheme.BILINEAR:
        corners = [
            (ml, jl, (1 - w_t) * (1 - w_k)),
            (mh, jl, (1 - w_t) * w_k),
            (ml, jh, w_t * (1 - w_k)),
            (mh, jh, w_t * w_k),
        ]
    elif scheme is InterpolationScheme.NEAREST:
        m_near = np.where(w_k > 0.5, mh, ml)
        j_near = np.where(w_t > 0.5, jh, jl)
        corners = [(m_near, j_near, np.ones_like(w_k))]
    else:
        # cell split along the (theta_l, k_l) -> (theta_h, k_h) diagonal
        lower = w_k <= w_t
        corners = [
            (ml, jl, np.where(lower, 1 - w_t, 1 - w_k)),
            (np.where(lower, ml, mh), np.where(lower, jh, jl), np.where(lower, w_t - w_k, w_k - w_t)),
            (mh, jh, np.where(lower, w_k, w_t)),
        ]

    out = []
    for m, j, w in corners:
        wrap = j >= n_theta  # theta = pi is theta = 0 with the radius negated
        out.append((np.where(wrap, -m, m), np.where(wrap, j - n_theta, j), w))
    return out


def build_interp_matrix(n: int, n_rho: int, n_theta: int, scheme="bilinear") -> SparseInterpMatrix:
    """Interpolation weights from the polar spectrum grid onto the Cartesian grid.

    Targets farther from the origin than ``n_rho/2 - 1`` bins get an empty row,
    which keeps every bracketing node on the grid and leaves the spectrum
    zero-filled outside the sampled disk.
    """
    scheme = InterpolationScheme.parse(scheme)
    if n < 1 or n_rho < 2 or n_theta < 1 or n_rho % 2:
        raise ValueError("need n >= 1, even n_rho >= 2, n_theta >= 1")
    half_rho = n_rho // 2
    max_radius = float(half_rho - 1)

    kc = np.arange(n) - n // 2
    kx, ky = np.meshgrid(kc.astype(float), kc.astype(float))  # row index is ky
    kx, ky = kx.ravel(), ky.ravel()
    k, theta, radius = cartesian_to_folded_polar(kx, ky)
    target = np.flatnonzero(radius <= max_radius + _SNAP)
    k, theta = k[target], theta[target]

    rows, cols, vals = [], [], []
    for m, j, w in polar_weights(k, theta, n_theta, scheme):
        rows.append(target)
        cols.append((m + half_rho) * n_theta + j)
        vals.append(w)
    keep = np.concatenate(vals) > 0
    rows = np.concatenate(rows)[keep]
    cols = np.concatenate(cols)[keep]
    vals = np.concatenate(vals)[keep]
    if cols.size and (cols.min() < 0 or cols.max() >= n_rho * n_theta):
        raise AssertionError("interpolation node fell off the polar grid")

    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n_rho * n_theta))
    mat.sum_duplicates()
    mat.sort_indices()
    return SparseInterpMatrix(
        n=n,
        n_rho=n_rho,
        n_theta=n_theta,
        scheme=scheme,
        indptr=mat.indptr.astype(np.int64),
        indices=mat.indices.astype(np.int64),
        weights=mat.data.astype(np.float64),
        max_radius=max_radius,
    )


def apply_interp(A: SparseInterpMatrix, polar_spectrum) -> np.ndarray:
    """``y = A @ x``; empty rows give exact zeros."""
    x = np.asarray(polar_spectrum)
    if x.ndim != 1 or x.shape[0] != A.n_cols:
        raise ValueError(f"expected a vector of length {A.n_cols}, got shape {x.shape}")
    return A.csr @ x


def schur_bound(A: SparseInterpMatrix):
    """Max absolute row sum, max absolute column sum, and their product."""
    absm = abs(A.csr)
    row = float(np.max(absm.sum(axis=1))) if A.n_rows else 0.0
    col = float(np.max(absm.sum(axis=0))) if A.n_cols else 0.0
    return row, col, row * col


def max_singular_value(A, tol: float = 1e-10, max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest singular value by power iteration on ``A @ A.T``.

    ``A`` may be a SparseInterpMatrix or anything supporting ``@`` and ``.T``.
    The start vector comes from a fixed seed, so the result is reproducible.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mat = A.csr if isinstance(A, SparseInterpMatrix) else A
    matT = mat.T.tocsr() if sp.issparse(mat) else mat.T
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(mat.shape[0])
    u /= np.linalg.norm(u)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = mat @ (matT @ u)
        lam_new = float(u @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        u = w / norm
        if abs(lam_new - lam) <= tol * lam_new:
            logger.debug("power iteration converged after %d iterations", it)
            return math.sqrt(lam_new)
        lam = lam_new
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations", detail={"sigma_sq": lam, "vector": u}
    )
