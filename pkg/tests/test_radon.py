import math

import numpy as np
import pytest

from qtomo.errors import FormatError
from qtomo.grids import ImageGrid, disk_phantom, gaussian_blob, shepp_logan
from qtomo.radon import (
    Sinogram,
    backproject,
    decode_rsin,
    encode_rsin,
    forward_radon,
    read_sinogram,
    write_sinogram,
)


def test_sampling_grids():
    s = Sinogram(np.zeros((8, 4)))
    assert np.allclose(s.rho_samples, -1 + (np.arange(8) + 0.5) * 0.25)
    assert np.allclose(s.theta_samples, np.arange(4) * np.pi / 4)
    assert s.rho_spacing == 0.25


def test_zero_image():
    assert np.all(forward_radon(ImageGrid(np.zeros((16, 16))), 16, 8).data == 0)
    assert np.all(backproject(Sinogram(np.zeros((16, 8))), 16).data == 0)


@pytest.fixture(scope="module")
def disk128():
    return forward_radon(disk_phantom(128, 0, 0, 0.5, 1.0), 128, 128)


def test_disk_chord_length(disk128):
    rho = disk128.rho_samples
    chord = np.where(np.abs(rho) < 0.5, 2 * np.sqrt(np.clip(0.25 - rho**2, 0, None)), 0.0)
    h = 2 / 128
    assert np.abs(disk128.data - chord[:, None]).max() <= 3 * h


@pytest.mark.xfail(strict=True, reason="pixel staircase of a sharp disk exceeds 2h across angles; see smooth variant")
def test_disk_columns_rotationally_symmetric(disk128):
    h = 2 / 128
    spread = disk128.data.max(axis=1) - disk128.data.min(axis=1)
    assert spread.max() <= 2 * h


def test_smooth_phantom_rotationally_symmetric():
    sino = forward_radon(gaussian_blob(128, 0.2), 128, 64)
    h = 2 / 128
    spread = sino.data.max(axis=1) - sino.data.min(axis=1)
    assert spread.max() <= 2 * h


def test_linearity():
    rng = np.random.default_rng(3)
    a = ImageGrid(rng.standard_normal((32, 32)))
    b = ImageGrid(rng.standard_normal((32, 32)))
    combo = ImageGrid(2.5 * a.data - 0.7 * b.data)
    lhs = forward_radon(combo, 32, 16).data
    rhs = 2.5 * forward_radon(a, 32, 16).data - 0.7 * forward_radon(b, 32, 16).data
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(lhs).max()


def test_evenness_of_centered_phantom(disk128):
    h = 2 / 128
    assert np.abs(disk128.data - disk128.data[::-1]).max() <= 3 * h


def test_mass_consistency():
    sino = forward_radon(gaussian_blob(64, 0.2, 0.1, -0.1), 64, 32)
    mass = sino.data.sum(axis=0) * sino.rho_spacing
    assert (mass.max() - mass.min()) / mass.mean() <= 0.02
    img_mass = gaussian_blob(64, 0.2, 0.1, -0.1).data.sum() * (2 / 64) ** 2
    assert abs(mass.mean() - img_mass) / img_mass < 0.02


def test_backproject_single_ray():
    data = np.zeros((32, 8))
    data[16, 0] = 1.0  # rho just above 0, theta = 0: the vertical line x = rho
    img = backproject(Sinogram(data), 32).data
    cols = np.flatnonzero(np.abs(img).sum(axis=0))
    x = -1 + (cols + 0.5) * 2 / 32
    assert np.all(np.abs(x) < 2 * 2 / 32)
    assert np.allclose(img[:, cols], img[:1, cols])


def test_backproject_blur_peaks_at_center():
    img = disk_phantom(64, 0, 0, 0.5, 1)
    bp = backproject(forward_radon(img, 64, 64), 64).data
    c = -1 + (np.arange(64) + 0.5) * 2 / 64
    centre = bp[31:33, 31:33].mean()
    ix = np.argmin(abs(c - 0.9))
    assert centre > bp[32, ix]


def test_rsin_round_trip(tmp_path):
    sino = forward_radon(shepp_logan(16), 16, 8)
    write_sinogram(sino, tmp_path / "s.rsin")
    back = read_sinogram(tmp_path / "s.rsin")
    assert np.array_equal(back.data, sino.data)
    assert (tmp_path / "s.rsin").read_bytes().startswith(b"RSIN1 16 8\n")
    assert decode_rsin(encode_rsin(sino)) == sino


@pytest.mark.parametrize("raw", [b"RSIN1 4\n", b"RSIN1 4 4\n" + b"\0" * 10, b"RIMG1 4 4\n", b"RSIN1 a b\n"])
def test_rsin_malformed(raw):
    with pytest.raises(FormatError):
        decode_rsin(raw)


def test_slice_theorem_against_analytic_gaussian():
    # 2D transform of exp(-r^2 / (2 s^2)) is 2 pi s^2 exp(-2 pi^2 s^2 |nu|^2)
    from qtomo.spectral import centered_bins, dft1d, fftshift, origin_phase

    n, sigma = 128, 0.15
    sino = forward_radon(gaussian_blob(n, sigma), n, 6)
    k = centered_bins(n)
    exact = 2 * math.pi * sigma**2 * np.exp(-2 * math.pi**2 * sigma**2 * (k / 2.0) ** 2)
    band = np.abs(k) <= n // 4
    for j in range(sino.n_theta):
        spec = fftshift(dft1d(sino.data[:, j])) * origin_phase(n) * sino.rho_spacing
        err = np.linalg.norm((spec - exact)[band]) / np.linalg.norm(exact[band])
        assert err <= 0.05, j
