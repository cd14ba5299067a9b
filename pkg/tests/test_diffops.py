import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ceaflow import diffops

TH = diffops.nodes(128)


def band_limited(seed, n=128, modes=20):
    rng = np.random.default_rng(seed)
    th = diffops.nodes(n)
    f = np.full(n, rng.normal())
    for k in range(1, modes):
        f += rng.normal() / k**2 * np.cos(k * th) + rng.normal() / k**2 * np.sin(k * th)
    return f


def test_cos3_second_derivative():
    np.testing.assert_allclose(diffops.deriv_theta(np.cos(3 * TH), 2), -9 * np.cos(3 * TH), atol=1e-12)


@pytest.mark.parametrize("order", range(1, 7))
def test_constant_has_zero_derivatives(order):
    assert np.abs(diffops.deriv_theta(np.full(64, 3.7), order)).max() < 1e-14


@pytest.mark.parametrize("n, chop", [(16, None), (128, 1e-15), (256, 1e-15)])
def test_fourth_derivative_of_standard_perturbation(n, chop):
    # sample rounding grows like k^4; on finer grids it must be chopped first
    th = diffops.nodes(n)
    out = diffops.deriv_theta(1 + 0.1 * np.cos(2 * th), 4, chop=chop)
    np.testing.assert_allclose(out, 1.6 * np.cos(2 * th), atol=1e-12)


def test_integrals():
    assert diffops.integrate_theta(np.ones(64)) == 2 * math.pi
    assert abs(diffops.integrate_theta(np.cos(2 * TH))) < 1e-15
    f = (1 + 0.1 * np.cos(2 * TH)) * (1 - 0.3 * np.cos(2 * TH))
    assert diffops.integrate_theta(f) == pytest.approx(2 * math.pi - 0.03 * math.pi, abs=1e-14)


@pytest.mark.parametrize("order", [0, 7, 1.5])
def test_bad_order(order):
    with pytest.raises(ValueError):
        diffops.deriv_theta(np.ones(32), order)


@pytest.mark.parametrize("n", [15, 14, 17, 0])
def test_grid_size_check(n):
    with pytest.raises(ValueError):
        diffops.check_grid_size(n)


@given(st.integers(0, 2**32 - 1))
def test_composition_of_first_derivatives(seed):
    f = band_limited(seed)
    once = diffops.deriv_theta(diffops.deriv_theta(f, 1), 1)
    twice = diffops.deriv_theta(f, 2)
    assert np.abs(once - twice).max() <= 1e-12 * np.abs(twice).max()


@given(st.integers(0, 2**32 - 1))
def test_derivative_integrates_to_zero(seed):
    f = band_limited(seed)
    assert abs(diffops.integrate_theta(diffops.deriv_theta(f, 1))) <= 1e-12 * np.abs(f).max()


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_integration_by_parts(seed_f, seed_g):
    f, g = band_limited(seed_f), band_limited(seed_g)
    a = diffops.integrate_theta(f * diffops.deriv_theta(g, 1))
    b = diffops.integrate_theta(g * diffops.deriv_theta(f, 1))
    scale = diffops.integrate_theta(np.abs(f * diffops.deriv_theta(g, 1))) + 1.0
    assert abs(a + b) <= 1e-10 * scale


@given(st.floats(0.1, 10.0), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_deriv_s_constant_r_scaling(c, order, seed):
    f = band_limited(seed)
    got = diffops.deriv_s(f, np.full_like(f, c), order)
    want = c ** (-2.0 / 3.0 * order) * diffops.deriv_theta(f, order)
    np.testing.assert_allclose(got, want, atol=1e-12 * np.abs(want).max() + 1e-14)


def test_deriv_s_unit_r_is_deriv_theta():
    f = band_limited(3)
    assert np.array_equal(diffops.deriv_s(f, np.ones_like(f)), diffops.deriv_theta(f, 1))


def test_deriv_s_errors():
    f = np.ones(32)
    with pytest.raises(ValueError):
        diffops.deriv_s(f, np.zeros(32))
    with pytest.raises(ValueError):
        diffops.deriv_s(f, np.ones(32), order=5)
    assert np.abs(diffops.deriv_s(f, np.ones(32) * 2)).max() == 0


def test_resample_and_project_round_trip():
    f = band_limited(5, n=64, modes=30)
    fine = diffops.resample(f, 256)
    np.testing.assert_allclose(diffops.subsample(fine, 64), f, atol=1e-13)
    np.testing.assert_allclose(diffops.project(fine, 64)[:], diffops.project(f, 64), atol=1e-13)
    # interpolation reproduces a band-limited function off the coarse nodes
    th = diffops.nodes(256)
    g = np.cos(3 * diffops.nodes(64)) + 0.5 * np.sin(7 * diffops.nodes(64))
    np.testing.assert_allclose(diffops.resample(g, 256), np.cos(3 * th) + 0.5 * np.sin(7 * th), atol=1e-13)
    with pytest.raises(ValueError):
        diffops.resample(f, 32)
    with pytest.raises(ValueError):
        diffops.subsample(fine, 100)


def test_fine_derivatives_match_coarse_derivatives():
    f = band_limited(11, n=64, modes=25)
    fine = diffops.fine_derivatives(f, (0, 1, 2, 4), 128)
    for order, vals in zip((0, 1, 2, 4), fine):
        coarse = f if order == 0 else diffops.deriv_theta(f, order)
        np.testing.assert_allclose(diffops.subsample(vals, 64), coarse, atol=1e-10 * np.abs(coarse).max())


def test_batched_last_axis():
    rows = np.stack([band_limited(s, n=32, modes=10) for s in range(3)])
    batched = diffops.fine_derivatives(rows, (2,), 64)[0]
    for i in range(3):
        np.testing.assert_allclose(batched[i], diffops.fine_derivatives(rows[i], (2,), 64)[0], atol=1e-14)
    np.testing.assert_allclose(diffops.project(batched, 32)[1], diffops.project(batched[1], 32), atol=1e-14)
