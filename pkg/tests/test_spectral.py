import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qtomo.spectral import (
    ComplexField,
    dft1d,
    dft2d,
    fftshift,
    origin_phase,
    ramp_filter,
    signed_bins,
    unshift,
)


def brute_dft(x, sign=-1):
    m = len(x)
    k = np.arange(m)
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / m) @ x


@pytest.mark.parametrize("m", [1, 2, 4, 8, 64, 256])
def test_dft_matches_brute_force_and_numpy(m, rng):
    x = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    got = dft1d(x)
    np.testing.assert_allclose(got, brute_dft(x), atol=1e-10 * max(1, m))
    np.testing.assert_allclose(got, np.fft.fft(x), atol=1e-12 * max(1, m))
    np.testing.assert_allclose(dft1d(x, "inverse"), np.fft.ifft(x), atol=1e-12)


def test_impulse_and_constant():
    e0 = np.zeros(8)
    e0[0] = 1
    np.testing.assert_allclose(dft1d(e0), np.ones(8))
    np.testing.assert_allclose(dft1d(e0, norm="unitary"), np.full(8, 1 / np.sqrt(8)))
    np.testing.assert_allclose(dft1d([1, 1, 1, 1]), [4, 0, 0, 0], atol=1e-15)


def test_round_trip(rng):
    x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    for norm in ("unnormalized", "unitary"):
        back = dft1d(dft1d(x, "forward", norm), "inverse", norm)
        assert np.abs(back - x).max() <= 1e-12


def test_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        dft1d(np.ones(6))
    with pytest.raises(ValueError):
        dft1d(np.ones(4), direction="sideways")


def test_axis_argument(rng):
    x = rng.standard_normal((8, 4, 16))
    np.testing.assert_allclose(dft1d(x, axis=1), np.fft.fft(x, axis=1), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 8), st.integers(0, 2**31 - 1))
def test_unitary_preserves_norm_and_parseval(log_m, seed):
    m = 2**log_m
    x = np.random.default_rng(seed).standard_normal(m) * (1 + 1j)
    nx = np.linalg.norm(x)
    assert abs(np.linalg.norm(dft1d(x, norm="unitary")) - nx) <= 1e-12 * nx
    assert abs(np.linalg.norm(dft1d(x)) ** 2 - m * nx**2) <= 1e-10 * m * nx**2


def test_dft2d(rng):
    delta = np.zeros((8, 16))
    delta[0, 0] = 1
    np.testing.assert_allclose(dft2d(delta), np.ones((8, 16)))
    f = rng.standard_normal((16, 8)) + 1j * rng.standard_normal((16, 8))
    assert np.abs(dft2d(dft2d(f), "inverse") - f).max() <= 1e-12
    separable = dft1d(dft1d(f, axis=1), axis=0)
    assert np.array_equal(dft2d(f), separable)
    np.testing.assert_allclose(dft2d(f), np.fft.fft2(f), atol=1e-12)
    field = ComplexField(f)
    out = dft2d(field, "forward", "unitary")
    assert isinstance(out, ComplexField)
    np.testing.assert_allclose(out.data, np.fft.fft2(f, norm="ortho"), atol=1e-12)


def test_fftshift():
    v = np.array(["a", "b", "c", "d"])
    assert list(fftshift(v)) == ["c", "d", "a", "b"]
    x = np.arange(8)
    assert np.array_equal(fftshift(fftshift(x)), x)
    assert np.array_equal(unshift(fftshift(x)), x)
    d = np.zeros(8)
    d[0] = 1
    assert fftshift(d)[4] == 1
    f = ComplexField(np.arange(16).reshape(4, 4))
    c = fftshift(f)
    assert c.centered
    assert np.array_equal(unshift(c).data, f.data) and not unshift(c).centered
    with pytest.raises(ValueError):
        fftshift(c)


def test_ramp_filter():
    dc = np.zeros((8, 3), dtype=complex)
    dc[0] = 5.0
    assert np.all(ramp_filter(dc) == 0)
    row = np.ones(16)
    filtered = dft1d(ramp_filter(dft1d(row)), "inverse")
    assert abs(filtered.sum()) < 1e-12
    x = np.random.default_rng(0).standard_normal((16, 2)) + 0j
    nu = np.abs(signed_bins(16)) / 16
    np.testing.assert_allclose(ramp_filter(ramp_filter(x)), x * (nu**2)[:, None])
    assert signed_bins(4).tolist() == [0, 1, 2, -1]


def test_origin_phase_recenters_a_symmetric_signal():
    # a signal symmetric about the grid middle has a real spectrum once referred to the middle
    m = 32
    c = -1 + (np.arange(m) + 0.5) * 2 / m
    sig = np.exp(-(c**2) / 0.05)
    spec = fftshift(dft1d(sig)) * origin_phase(m)
    assert np.abs(spec.imag).max() < 1e-12
