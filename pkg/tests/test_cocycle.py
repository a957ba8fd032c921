import math

import numpy as np
import pytest

from partcap.cocycle import (
    InvalidRadiusError,
    PerturbationFamily,
    coboundary_from,
    constant_roof,
    fourier_basis,
    fourier_family,
    refined_radius,
    roof_derivative,
    theta,
    trig_roof,
)
from partcap.trig import TrigPoly


def test_roof_derivative(sin_tau):
    assert roof_derivative(sin_tau, 0.0) == pytest.approx(1.0)
    assert roof_derivative(sin_tau, 0.5) == pytest.approx(-1.0)
    assert roof_derivative(constant_roof(2.5), 0.123) == 0.0


def test_theta_examples(sin_tau):
    assert sin_tau.sup_deriv == pytest.approx(1.0, abs=1e-12)
    assert theta(sin_tau, 2.0, 2.0) == pytest.approx((1.0, 2.0))
    assert theta(constant_roof(0.7), 2.0, 1.0) == (0.0, 1.0)
    assert theta(sin_tau, 1.5, 3.0) == pytest.approx((2.0, 6.0))


def test_theta_rejects_small_radius(sin_tau):
    with pytest.raises(InvalidRadiusError):
        theta(sin_tau, 2.0, 0.5)
    with pytest.raises(ValueError):
        theta(sin_tau, 1.0, 3.0)


def test_coboundary_examples(doubling, phi):
    zero = coboundary_from(TrigPoly(), 0.3, doubling)
    xs = np.linspace(0, 1, 11)
    assert np.allclose(zero(xs), 0.3) and np.all(zero.deriv(xs) == 0.0)
    assert zero.sup_deriv == 0.0
    cb = coboundary_from(phi, 0.0, doubling)
    assert cb(0.0) == pytest.approx(0.0, abs=1e-15)
    assert cb.deriv(0.0) == pytest.approx(0.2 * math.pi)


def test_coboundary_derivative_matches_finite_difference(wavy, phi):
    cb = coboundary_from(phi, 0.1, wavy)
    xs = np.linspace(0.01, 0.99, 37)
    h = 1e-6
    fd = (cb(xs + h) - cb(xs - h)) / (2 * h)
    assert np.allclose(cb.deriv(xs), fd, atol=1e-7)


def test_apply_params_examples():
    base0 = trig_roof()
    fam = PerturbationFamily(base0, (TrigPoly(sin=(1.0,)),))
    xs = np.linspace(0, 1, 33)
    assert np.all(fam.apply_params([0.0])(xs) == base0(xs))
    tau = fam.apply_params([2.0])
    assert np.allclose(tau(xs), 2 * np.sin(2 * np.pi * xs), atol=1e-15)
    fam2 = PerturbationFamily(trig_roof(sin=(1.0,)), (TrigPoly(cos=(1.0,)),))
    t2 = fam2.apply_params([1.0])
    assert t2.poly.sin == (1.0,) and t2.poly.cos == (1.0,)
    exact = 2 * math.pi * math.sqrt(2)
    assert exact <= t2.sup_deriv <= exact * (1 + 1e-6)


def test_apply_params_is_affine(sin_tau):
    fam = fourier_family(sin_tau, 3)
    rng = np.random.default_rng(5)
    xs = np.linspace(0, 1, 257)
    for _ in range(10):
        t, s = rng.uniform(-1, 1, fam.m), rng.uniform(-1, 1, fam.m)
        lhs = fam.apply_params(t)(xs) + fam.apply_params(s)(xs) - sin_tau(xs)
        assert np.allclose(lhs, fam.apply_params(t + s)(xs), atol=1e-12)


def test_apply_params_validates(sin_tau):
    fam = fourier_family(sin_tau, 1)
    with pytest.raises(ValueError):
        fam.apply_params([1.0])
    with pytest.raises(ValueError):
        fam.apply_params([np.inf, 0.0])


def test_fourier_basis_layout():
    basis = fourier_basis(4)
    assert len(basis) == 8
    assert basis[0].sin == (1 / (2 * math.pi),) and basis[1].cos == (1 / (2 * math.pi),)
    assert basis[7].cos == (0.0, 0.0, 0.0, 1 / (8 * math.pi))
    xs = np.arange(4096) / 4096
    for phi in basis:
        assert np.abs(phi.deriv(xs)).max() == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_sup_deriv_bounds_dense_samples(seed, wavy):
    rng = np.random.default_rng(seed)
    xs = np.arange(100_000) / 100_000
    tau = trig_roof(sin=rng.normal(size=4), cos=rng.normal(size=4), const=1.0)
    assert np.abs(tau.deriv(xs)).max() <= tau.sup_deriv
    cb = coboundary_from(TrigPoly(sin=rng.normal(0, 0.1, 2), cos=rng.normal(0, 0.1, 2)), 0.0, wavy)
    assert np.abs(cb.deriv(xs)).max() <= cb.sup_deriv


def test_refined_radius(sin_tau):
    assert refined_radius(sin_tau, 2.0, 3.0, 0) == pytest.approx(3.0)
    assert refined_radius(sin_tau, 2.0, 3.0, 1) == pytest.approx(2.0)
    assert refined_radius(sin_tau, 2.0, 3.0, 40) == pytest.approx(1.0)


def test_uniform_sup_deriv_dominates_samples(sin_tau):
    fam = fourier_family(sin_tau, 2)
    rng = np.random.default_rng(0)
    bound = fam.uniform_sup_deriv()
    for _ in range(20):
        assert fam.apply_params(rng.uniform(-1, 1, fam.m)).sup_deriv <= bound
