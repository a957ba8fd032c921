import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partcap import PerturbationFamily, fourier_family, theta, trig_roof
from partcap.branch_enum import all_words, branch_arrays, word_index
from partcap.captivity import XStrategy, ncal, ncal_at
from partcap.genericity import (
    AffineParameterMap,
    basis_jac_survey,
    default_scan_radius,
    exceeds_threshold,
    g_map,
    grids,
    jac_monotonicity_check,
    jacobian,
    leb_bound_check,
    parameter_scan,
    proof_constants,
    q_inequality,
    required_N,
    sample_params,
    wilson_interval,
    witness_extract,
)
from partcap.trig import TrigPoly

from oracles import gram_jacobian, linear_scan_q, regroup


def _affine(L):
    L = np.asarray(L, dtype=float)
    return AffineParameterMap(L, np.zeros(L.shape[0]))


def test_proof_constants_example():
    c = proof_constants(0.3, 2.0, 2.0)
    assert c.N == 28 == math.ceil(6 * math.log(4) / 0.3)
    assert c.J == 1
    assert c.q == linear_scan_q(0.3, 28, 1) == 59
    assert (c.q + 1) * c.N * math.exp(-c.q * 0.15) < 0.25
    assert c.q * c.N * math.exp(-(c.q - 1) * 0.15) >= 0.25
    assert c.violations(2.0) == []
    a, b = c.intervals[0]
    assert a < math.log(2) < b and 0 < b - a < 0.1


@settings(max_examples=60, deadline=None)
@given(
    rho=st.floats(0.05, 2.0),
    lam=st.floats(1.01, 4.0),
    spread=st.floats(0.0, 3.0),
)
def test_proof_constants_satisfy_definitions(rho, lam, spread):
    Lam = lam + spread
    c = proof_constants(rho, lam, Lam)
    assert c.violations(Lam) == []
    assert c.N == required_N(rho, Lam)
    assert c.q == linear_scan_q(rho, c.N, c.J)
    rates = np.linspace(math.log(lam), math.log(Lam), 50)
    assert np.all(c.classify(rates) >= 0)


def test_proof_constants_errors():
    with pytest.raises(ValueError):
        proof_constants(0.0, 2, 2)
    with pytest.raises(ValueError):
        proof_constants(0.3, 3, 2)


def test_overrides_are_flagged():
    c = proof_constants(0.3, 2, 2).with_overrides(N=1, q=2)
    assert c.relaxed and (c.N, c.q) == (1, 2)
    assert c.violations(2.0)
    assert not q_inequality(2, 1, 0.3, 1)


def test_grids_examples():
    g = grids(1, 2.0)
    assert list(g.T) == [0, 0.25, 0.5, 0.75]
    assert not g.truncated
    assert len(grids(2, 2.0).T) == 16
    g = grids(20, 2.0, 1 << 16)
    assert len(g.T) == 1 << 16 and g.truncated
    assert len(grids(3, 1.2).T) == 27


def test_g_map_examples(doubling):
    zero = PerturbationFamily(trig_roof(), (TrigPoly(const=1.0),))
    g = g_map(doubling, zero, 0.3, [(0, 1), (1, 1)])
    assert np.all(g.linear == 0)
    fam = PerturbationFamily(trig_roof(), (TrigPoly(sin=(1.0,)),))
    g = g_map(doubling, fam, 0.0, [(0,)])
    assert g.linear[0, 0] == pytest.approx(math.pi, abs=1e-14)


def test_g_map_offset_is_base_slope(wavy, sin_tau):
    fam = fourier_family(sin_tau, K=3)
    words = all_words(6, 2)[::7]
    g = g_map(wavy, fam, 0.37, words)
    _, _, S = branch_arrays(wavy, sin_tau, [0.37], 6)
    ref = S[0][[word_index(w, 2) for w in words]]
    assert np.allclose(g(np.zeros(fam.m)), ref, atol=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_g_map_affinity(seed, wavy, sin_tau):
    rng = np.random.default_rng(seed)
    fam = fourier_family(sin_tau, K=4)
    words = [all_words(7, 2)[i] for i in rng.choice(128, 10, replace=False)]
    x = float(rng.uniform())
    g = g_map(wavy, fam, x, words)
    for _ in range(3):
        t = rng.uniform(-1, 1, fam.m)
        _, _, S = branch_arrays(wavy, fam.apply_params(t), [x], 7)
        ref = S[0][[word_index(w, 2) for w in words]]
        assert np.allclose(g(t), ref, atol=1e-10)


def test_g_map_rejects_mixed_lengths(doubling, sin_tau):
    with pytest.raises(ValueError):
        g_map(doubling, fourier_family(sin_tau, 1), 0.0, [(0,), (0, 1)])


def test_jacobian_examples():
    assert jacobian(_affine(np.eye(2))) == pytest.approx(1.0)
    assert jacobian(_affine([[3, 0, 0], [0, 4, 0]])) == pytest.approx(12.0)
    assert jacobian(_affine(np.zeros((2, 3)))) == 0.0
    assert jacobian(_affine([[1, 2], [2, 4]])) == 0.0
    assert jacobian(_affine(np.ones((3, 2)))) == 0.0


def test_jacobian_matches_gram_oracle():
    rng = np.random.default_rng(9)
    for _ in range(100):
        m = int(rng.integers(1, 9))
        p = int(rng.integers(1, m + 1))
        L = rng.normal(size=(p, m)) * rng.uniform(0.1, 3)
        assert jacobian(_affine(L)) == pytest.approx(gram_jacobian(L), rel=1e-9)


def test_jac_monotonicity():
    assert jac_monotonicity_check(_affine(np.eye(3)), 20, 0)
    g = _affine([[3, 0, 0], [0, 4, 0]])
    assert jacobian(g.restrict([0, 1])) == pytest.approx(jacobian(g))
    rng = np.random.default_rng(1)
    assert jac_monotonicity_check(_affine(rng.normal(size=(3, 6))), 100, 2)


def test_leb_bound_examples():
    one = leb_bound_check(_affine([[1.0]]), 0.1, 100_000, 0)
    assert one.empirical == pytest.approx(0.1, abs=0.01)
    assert one.bound == pytest.approx(0.1)
    assert one.passed
    ten = leb_bound_check(_affine([[10.0]]), 0.1, 100_000, 0)
    assert ten.empirical == pytest.approx(0.01, abs=0.003)
    assert ten.bound == pytest.approx(0.01)
    assert ten.passed
    rng = np.random.default_rng(4)
    check = leb_bound_check(_affine(rng.normal(size=(2, 4))), 0.2, 100_000, 5)
    assert check.passed and check.empirical <= check.bound * 1.05
    with pytest.raises(ValueError):
        leb_bound_check(_affine(np.zeros((1, 2))), 0.1, 10, 0)


def test_basis_jac_survey(wavy, sin_tau):
    fam = fourier_family(sin_tau, K=4)
    rep = basis_jac_survey(wavy, fam, 6, 3, [0.1, 0.6], 5, 0)
    assert rep["p"] == 3 and rep["m"] == 8
    assert rep["min_jac"] >= 0
    if rep["min_jac"] > 0:
        assert rep["scale_for_unit_jac"] >= 1.0


def _check_witness(w, cmap, tau, R, n, q):
    _, th = theta(tau, cmap.lam, R)
    _, D, S = branch_arrays(cmap, tau, [w.x], n)
    members = [a for b in w.B for a in w.Sigma[b]]
    groups = regroup(members, q)
    assert set(groups) == set(w.B)
    assert tuple(len(groups[b]) for b in w.B) == w.sizes
    for b in w.B:
        for a in w.Sigma[b]:
            assert a[-q:] == b
            i = word_index(a, cmap.degree)
            assert S[0, i] - th / D[0, i] <= w.slope <= S[0, i] + th / D[0, i]


def test_witness_zero_roof_symmetric(doubling):
    tau = trig_roof()
    n, q = 8, 3
    c = proof_constants(0.05, 2, 2).with_overrides(N=1, q=q)
    w = witness_extract(doubling, tau, 1.0, n, c, XStrategy("grid", 4))
    assert w is not None
    assert len(w.B) == 2 * (q + 1) == 8
    assert set(w.sizes) == {2 ** (n - q)}
    _check_witness(w, doubling, tau, 1.0, n, q)


def test_witness_absent_when_q_too_large(doubling, sin_tau):
    c = proof_constants(0.3, 2, 2)
    assert witness_extract(doubling, sin_tau, 2.0, 12, c) is None
    assert witness_extract(doubling, sin_tau, 2.0, 4, c.with_overrides(N=1, q=4)) is None


def test_witness_generic_matches_regrouping(doubling, sin_tau):
    # relaxed constants; l^q must be at least 2 (q + 1) N, so q = 3 for l = 2
    n, q, R = 8, 3, 80.0
    c = proof_constants(0.02, 2, 2).with_overrides(N=1, q=q)
    w = witness_extract(doubling, sin_tau, R, n, c, XStrategy("grid", 32))
    assert w is not None
    assert w.count == ncal(doubling, sin_tau, R, n, XStrategy("grid", 32)).count
    assert len(set(w.sizes)) > 1
    _check_witness(w, doubling, sin_tau, R, n, q)
    full = ncal_at(doubling, sin_tau, R, n, w.x)
    ref = regroup(full.words, q)
    assert sorted((len(v) for v in ref.values()), reverse=True)[: len(w.B)] == list(w.sizes)


def test_witness_generic_absent_at_small_radius(doubling, sin_tau):
    # at R = 2 the branches through the best slope fill fewer than 8 truncation classes
    n, q = 12, 3
    c = proof_constants(0.02, 2, 2).with_overrides(N=1, q=q)
    strat = XStrategy("grid", 32)
    assert witness_extract(doubling, sin_tau, 2.0, n, c, strat) is None
    best = ncal(doubling, sin_tau, 2.0, n, strat)
    assert len(regroup(best.words, q)) < c.n_groups


def test_sample_params_reproducible():
    a = sample_params(7, 3, 8)
    assert np.array_equal(a, sample_params(7, 3, 8))
    assert not np.array_equal(a, sample_params(7, 4, 8))
    assert np.all(np.abs(a) <= 1)


def test_threshold_is_strict():
    assert not exceeds_threshold(2**10, math.log(2), 10)
    assert exceeds_threshold(2**10, math.log(2) - 1e-3, 10)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 200)
    assert lo == 0.0 and 0 < hi < 0.03
    lo, hi = wilson_interval(100, 200)
    assert lo < 0.5 < hi


def test_scan_zero_base_sin_basis(doubling):
    fam = PerturbationFamily(trig_roof(), (TrigPoly(sin=(1.0,)),))
    tau0 = fam.apply_params([0.0])
    assert ncal(doubling, tau0, 1.0, 6, "grid:8").count == 64
    assert exceeds_threshold(64, 0.5, 6)


def test_scan_rho_at_log_degree_gives_zero(doubling, sin_tau):
    fam = fourier_family(sin_tau, K=1)
    rep = parameter_scan(doubling, fam, None, math.log(2), [3, 5], 10, seed=1, grid_size=8)
    assert rep.fractions == [0.0, 0.0]


def test_scan_reproducible_and_worker_independent(doubling, sin_tau):
    fam = fourier_family(sin_tau, K=2)
    a = parameter_scan(doubling, fam, None, 0.3, [4, 6], 12, seed=5, grid_size=16)
    b = parameter_scan(doubling, fam, None, 0.3, [4, 6], 12, seed=5, grid_size=16, workers=2)
    assert a == b
    assert a.R == default_scan_radius(fam)
    assert all(0 <= f <= 1 for f in a.fractions)
    with pytest.raises(ValueError):
        parameter_scan(doubling, fam, None, 0.3, [4], 0, seed=5)
