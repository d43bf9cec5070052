"""End-to-end acceptance criteria, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary (see conftest.py).
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from qtomo.cli import main
from qtomo.grids import disk_phantom, gaussian_blob, shepp_logan
from qtomo.interp import build_interp_matrix, max_singular_value, schur_bound
from qtomo.qsim import (
    EXACT,
    DEFAULT_NORM_BOUND,
    TAYLOR,
    DilatedHamiltonian,
    RegisterLayout,
    RegisterState,
    choose_evolution_time,
    evolve_dilated,
    measure_ancilla,
    mri_reconstruct_quantum,
    phase_aligned_distance,
    prepare_polar_state,
    run_ct_quantum_pipeline,
    sample_pixels,
    total_variation,
)
from qtomo.radon import forward_radon
from qtomo.recon import affine_fit, backproject, fbp_reconstruct, fourier_slice_reconstruct, rmse
from qtomo.spectral import dft1d, dft2d, signed_bins

GOLDEN = Path(__file__).parent / "golden" / "figs3_recon.rimg"


def test_criterion_01_mri_round_trip():
    start = time.perf_counter()
    img = shepp_logan(64).data
    kspace = dft2d(img.astype(complex), "forward", "unitary")
    state = mri_reconstruct_quantum(kspace)
    elapsed = time.perf_counter() - start
    assert np.abs(state.amplitudes - img.ravel() / np.linalg.norm(img)).max() <= 1e-10
    assert elapsed < 1.0


def test_criterion_02_quantum_classical_equivalence():
    start = time.perf_counter()
    eps = 1e-4
    sino = forward_radon(shepp_logan(32), 32, 32)
    res = run_ct_quantum_pipeline(sino, "bilinear", eps, EXACT, "postselect")
    classical = fourier_slice_reconstruct(sino, 32, "bilinear")
    elapsed = time.perf_counter() - start
    assert phase_aligned_distance(res.state.amplitudes, classical.data) <= 10 * eps
    assert elapsed < 30.0


def test_criterion_03_taylor_fidelity():
    start = time.perf_counter()
    eps = 1e-4
    H = DilatedHamiltonian(build_interp_matrix(16, 16, 16, "bilinear"))
    state = prepare_polar_state(forward_radon(shepp_logan(16), 16, 16), H)
    t = choose_evolution_time(eps)
    exact = evolve_dilated(state, H, t, eps, EXACT)
    taylor = evolve_dilated(state, H, t, eps, TAYLOR)
    elapsed = time.perf_counter() - start
    assert np.abs(exact.amplitudes - taylor.amplitudes).max() <= 1e-9
    assert elapsed < 10.0


def test_criterion_04_schur_and_singular_value_bound():
    start = time.perf_counter()
    for n in (16, 32, 64, 128):
        A = build_interp_matrix(n, n, n, "bilinear")
        sigma_sq = max_singular_value(A) ** 2
        assert sigma_sq <= 21, n
        assert sigma_sq <= schur_bound(A)[2] + 1e-9, n
    assert time.perf_counter() - start < 60.0


def test_criterion_05_truncation_bound():
    start = time.perf_counter()
    A = build_interp_matrix(16, 16, 16, "bilinear")
    H = DilatedHamiltonian(A)
    sigma = max_singular_value(A)
    t = choose_evolution_time(1e-3, DEFAULT_NORM_BOUND)
    bound = sigma**3 * t**3 / 6
    rng = np.random.default_rng(2024)
    for _ in range(100):
        v = rng.standard_normal(2 * H.dim) + 1j * rng.standard_normal(2 * H.dim)
        v /= np.linalg.norm(v)
        assert np.linalg.norm(H.sin_apply(v, t) - t * H.apply(v)) <= bound
    assert time.perf_counter() - start < 30.0


def test_criterion_06_p0_consistency():
    A = build_interp_matrix(32, 32, 32, "bilinear")
    H = DilatedHamiltonian(A)
    sigma = max_singular_value(A)
    sino = forward_radon(disk_phantom(32, 0, 0, 0.5, 1.0), 32, 32)
    t = choose_evolution_time(1e-4)
    state = prepare_polar_state(sino, H)
    _, _, p0 = measure_ancilla(evolve_dilated(state, H, t), "postselect", 0)
    fhat = state.block(1)[: A.n_cols]
    predicted = t**2 * np.linalg.norm(A.csr @ fhat) ** 2
    assert abs(p0 - predicted) / predicted <= 2 * (sigma * t) ** 2 * (1 / 6 + 1 / 2)


def test_criterion_07_row_sum_and_sparsity():
    for scheme in ("nearest", "simplex", "bilinear"):
        for n in (16, 32, 64):
            A = build_interp_matrix(n, n, n, scheme)
            nnz = A.row_nnz()
            assert nnz.max() <= A.scheme.sparsity
            sums = np.add.reduceat(A.weights, A.indptr[:-1][nnz > 0])
            assert np.abs(sums - 1).max() <= 1e-12


def test_criterion_08_fourier_slice_theorem():
    n = 128
    img = gaussian_blob(n, 0.15)
    sino = forward_radon(img, n, 8)
    h = 2 / n
    proj_spec = dft1d(sino.data[:, 0]) * sino.rho_spacing
    # theta = 0 integrates along y, so the slice is the ky = 0 row of the image spectrum
    row_spec = dft2d(img.data.astype(complex))[0, :] * h * h
    band = np.abs(signed_bins(n)) <= n // 4
    err = np.linalg.norm((proj_spec - row_spec)[band]) / np.linalg.norm(row_spec[band])
    assert err <= 0.05


def test_criterion_09_fbp_quality_trend():
    phantom = shepp_logan(128)
    errs = []
    for angles in (32, 64, 128):
        sino = forward_radon(phantom, 128, angles)
        errs.append(rmse(fbp_reconstruct(sino, 128), phantom))
    assert errs[0] > errs[1] > errs[2]
    bp = affine_fit(backproject(sino, 128), phantom)
    assert errs[2] < rmse(bp, phantom)


def test_criterion_10_figs3_golden(tmp_path):
    assert main(["figs3", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "recon.rimg").read_bytes() == GOLDEN.read_bytes()


def test_criterion_11_measurement_sampling():
    rng = np.random.default_rng(11)
    v = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    state = RegisterState(RegisterLayout.of(y=4, x=4), v / np.linalg.norm(v))
    counts = sample_pixels(state, 10**6, seed=42)
    assert total_variation(counts, state) <= 0.01
    assert np.array_equal(counts, sample_pixels(state, 10**6, seed=42))


def _snapshot(directory: Path):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_criterion_12_cli_determinism(tmp_path):
    src = tmp_path / "src"
    assert main(["phantom", "shepp-logan", "16", "--out", str(src / "ph")]) == 0
    assert main(["phantom", "disk", "16", "--out", str(src / "disk")]) == 0
    assert main(["project", str(src / "ph" / "phantom.rimg"), "--out", str(src / "pr")]) == 0
    image = str(src / "ph" / "phantom.rimg")
    sino = str(src / "pr" / "sinogram.rsin")
    commands = [
        ["phantom", "shepp-logan", "16"],
        ["phantom", "disk", "32", "--radius", "0.3", "--cx", "0.2"],
        ["project", image, "--angles", "8"],
        ["reconstruct", "fourier-slice", sino, "--reference", image],
        ["reconstruct", "fourier-slice", sino, "--scheme", "simplex", "--ramp"],
        ["reconstruct", "fbp", sino],
        ["reconstruct", "backproject", sino],
        ["qreconstruct", sino],
        ["qreconstruct", sino, "--engine", "taylor", "--mode", "sample", "--epsilon", "0.1", "--seed", "5"],
        ["mri-sim", image],
        ["bounds", "8,16", "nearest"],
        ["compare", image, str(src / "disk" / "phantom.rimg")],
        ["figs3", "--size", "32", "--angles", "16"],
    ]
    for i, cmd in enumerate(commands):
        outs = []
        for rep in range(2):
            out = tmp_path / f"run{i}_{rep}"
            assert main(cmd + ["--out", str(out)]) == 0, cmd
            outs.append(_snapshot(out))
        assert outs[0] == outs[1], cmd
        assert "config.txt" in outs[0]
