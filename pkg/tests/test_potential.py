import math

import numpy as np
import pytest

from reuseboost.potential import (PotentialKind, madaboost_phi, madaboost_weight, phi, phi_prime,
                                  phi_second, potential_derivative)

E = math.e


@pytest.mark.parametrize("z, expected", [(0.0, 2.0), (-1.0, 3.0), (1.0, 3 / E)])
def test_phi_values(z, expected):
    assert phi(z) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("z, expected", [(-5.0, -1.0), (0.0, -1.0), (1.0, -2 / E)])
def test_phi_prime_values(z, expected):
    assert phi_prime(z) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("z, expected", [(-2.0, 0.0), (1.0, 1 / E), (2.0, 2 * E ** -2)])
def test_phi_second_values(z, expected):
    assert phi_second(z) == pytest.approx(expected, abs=1e-15)


def test_scalar_in_scalar_out_and_arrays_vectorize():
    assert isinstance(phi(0.5), float)
    z = np.array([-1.0, 0.0, 1.0])
    np.testing.assert_allclose(phi(z), [3, 2, 3 / E])
    assert phi_prime(z).shape == (3,)


@pytest.mark.parametrize("fn", [phi, phi_prime, phi_second])
@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_margins_rejected(fn, bad):
    with pytest.raises(ValueError):
        fn(bad)
    with pytest.raises(ValueError):
        fn(np.array([0.0, bad]))


def test_large_margins_return_exact_limit_without_warnings():
    with np.errstate(all="raise"):
        for fn in (phi, phi_prime, phi_second):
            assert fn(800.0) == 0.0
            assert fn(1e300) == 0.0


def test_grid_properties():
    z = np.linspace(-10, 10, 10_000)
    f, d1, d2 = phi(z), phi_prime(z), phi_second(z)
    assert np.all(f >= 0)
    assert np.all((d1 >= -1) & (d1 <= 0))
    assert np.all((d2 >= 0) & (d2 <= 1))
    assert np.all(np.diff(f) <= 0)
    np.testing.assert_array_equal(d1[z <= 0], -1.0)
    np.testing.assert_array_equal(d2[z <= 0], 0.0)


def test_seam_continuity():
    for fn in (phi, phi_prime, phi_second):
        assert abs(fn(1e-15) - fn(-1e-15)) <= 1e-12
        assert abs(fn(1e-15) - fn(0.0)) <= 1e-12


def test_central_differences_match_derivatives():
    z = np.linspace(-10, 10, 10_001)
    z = z[np.abs(z) > 1e-4]
    h = 1e-5
    fd1 = (phi(z + h) - phi(z - h)) / (2 * h)
    fd2 = (phi_prime(z + h) - phi_prime(z - h)) / (2 * h)
    np.testing.assert_allclose(fd1, phi_prime(z), atol=1e-6)
    np.testing.assert_allclose(fd2, phi_second(z), atol=1e-6)


def test_central_difference_at_seam_is_first_order():
    # phi''' jumps from 0 to 1 at the origin, so the symmetric quotient of
    # phi' there is off by h/4 rather than O(h^2).
    h = 1e-5
    fd = (phi_prime(h) - phi_prime(-h)) / (2 * h)
    assert fd == pytest.approx(h / 4, rel=1e-3)


def test_second_derivative_peaks_at_one():
    z = np.linspace(0, 20, 200_001)
    assert z[np.argmax(phi_second(z))] == pytest.approx(1.0, abs=1e-4)
    assert abs(phi_second(1.0) - math.exp(-1)) <= 1e-12


def test_smoothness_upper_bound():
    rng = np.random.default_rng(3)
    z = rng.uniform(-10, 10, 5000)
    d = rng.uniform(-3, 3, 5000)
    assert np.all(phi(z + d) <= phi(z) + phi_prime(z) * d + d ** 2 / 2 + 1e-12)


def test_madaboost_weight():
    np.testing.assert_allclose(madaboost_weight([-2.0, 0.0, 1.0]), [1.0, 1.0, math.exp(-1)])
    np.testing.assert_allclose(potential_derivative(PotentialKind.MADABOOST, [-1.0, 2.0]),
                               -madaboost_weight([-1.0, 2.0]))
    np.testing.assert_allclose(potential_derivative(PotentialKind.SMOOTH_PIECEWISE, [0.5]),
                               phi_prime([0.5]))
    z = np.linspace(-3, 3, 601)
    fd = (madaboost_phi(z + 1e-6) - madaboost_phi(z - 1e-6)) / 2e-6
    np.testing.assert_allclose(fd, -madaboost_weight(z), atol=1e-5)
