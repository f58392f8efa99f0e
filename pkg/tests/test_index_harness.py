import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from indexbench.index_harness import (
    Cochain,
    GradedMatrix,
    GrowthError,
    SchwartzPair,
    SmoothFunction,
    circle_dirac,
    decay_fit,
    decay_model,
    displacement,
    displacement_expm,
    displacement_laguerre,
    guiding_center,
    idempotency_residual,
    kernel_decay_scan,
    kernel_dimensions,
    levels_for,
    mckean_singer,
    monomial_spectrum,
    pairing_limit_sweep,
    pairing_prefactor,
    pairing_target,
    random_dirac,
    selfadjoint_residual,
    spectral_decomposition,
    str_index,
    tau_pairing,
    torus_dirac,
    torus_test_functions,
    wassermann_class,
)

T_GRID = np.geomspace(0.05, 2.0, 10)


# -- functional calculus --------------------------------------------------------------


def test_schwartz_pair_identity():
    x = np.linspace(-50, 50, 20001)
    for t in (0.05, 0.3, 1.0, 2.0):
        p = SchwartzPair(t)
        assert np.max(np.abs(p.f(x) ** 2 + p.g(x) ** 2 - p.f(x))) < 1e-14
    p = SchwartzPair(0.7)
    assert p.f(0.0) == 1 and p.g(0.0) == 0
    # the small-argument branch joins the direct formula smoothly
    assert abs(p.g(1e-5) - 0.7e-5) < 1e-15


def test_wassermann_of_zero_operator():
    D = GradedMatrix.dirac(np.zeros((2, 3)))
    ind = wassermann_class(D, 0.8)
    assert np.allclose(ind.full(), np.diag([1, 1, 1, -1, -1]), atol=0)


def test_wassermann_scalar_closed_form():
    x, t = 1.3, 0.6
    ind = wassermann_class(GradedMatrix.dirac(np.array([[x]])), t)
    e = math.exp(-(t * x) ** 2)
    h = math.exp(-(t * x) ** 2 / 2) * math.sqrt(1 - e)
    assert np.allclose(ind.full(), [[e, h], [h, -e]], atol=1e-15)


@given(seed=st.integers(0, 2**32 - 1), dp=st.integers(1, 20), dm=st.integers(1, 20),
       t=st.floats(0.05, 2.0))
def test_idempotent_and_selfadjoint(seed, dp, dm, t):
    D = random_dirac(np.random.default_rng(seed), dp, dm)
    ind = wassermann_class(D, t)
    assert idempotency_residual(ind) < 1e-10
    assert selfadjoint_residual(ind) < 1e-12


def test_wassermann_rejects_bad_input():
    D = random_dirac(np.random.default_rng(0), 3, 3)
    with pytest.raises(ValueError):
        wassermann_class(D, 0.0)
    bad = GradedMatrix(D.pp, D.pm * 2, D.mp, D.mm)
    with pytest.raises(ValueError, match="self-adjoint"):
        wassermann_class(bad, 1.0)


@pytest.mark.parametrize("dp,dm", [(3, 2), (4, 4), (2, 5)])
def test_str_index_equals_kernel_count(dp, dm):
    D = random_dirac(np.random.default_rng(dp * 10 + dm), dp, dm)
    kp, km = kernel_dimensions(D)
    for t in (0.1, 1.0, 3.0):
        assert abs(str_index(D, t) - (kp - km)) < 1e-9
        assert abs(str_index(D, t) - mckean_singer(D, t)) < 1e-9
    assert abs(str_index(GradedMatrix.dirac(np.zeros((2, 3))), 0.4) - 1) < 1e-15


# -- models -----------------------------------------------------------------------------------


@pytest.mark.parametrize("w", [0, 1, -2, 3])
def test_circle_index(w):
    m = circle_dirac(64, w)
    vals = [m.str_index(t) for t in T_GRID]
    assert max(abs(v - w) for v in vals) < 1e-9
    assert max(vals) - min(vals) < 1e-9
    assert kernel_dimensions(m.D)[0] - kernel_dimensions(m.D)[1] == w


def test_circle_too_coarse():
    with pytest.raises(ValueError, match="resolve"):
        circle_dirac(16, 2)


@pytest.mark.parametrize("N,k", [(16, 0), (16, 1), (16, -1), (24, 2), (24, -3)])
def test_torus_index(N, k):
    m = torus_dirac(N, k)
    vals = [m.str_index(t) for t in T_GRID]
    assert max(abs(v - k) for v in vals) < 1e-8
    assert max(vals) - min(vals) < 1e-9


def test_torus_under_resolved():
    with pytest.raises(ValueError):
        torus_dirac(4, 3)


def test_monomial_spectrum_matches_svd():
    rng = np.random.default_rng(2)
    M = np.zeros((5, 7), complex)
    cols = rng.permutation(7)[:4]
    for r, c in zip([0, 2, 3, 4], cols):
        M[r, c] = rng.normal() + 1j * rng.normal()
    sp = monomial_spectrum(M)
    r = len(sp.s)
    assert np.allclose((sp.U[:, :r] * sp.s) @ sp.Vh[:r], M)
    assert np.allclose(sp.U.conj().T @ sp.U, np.eye(5)) and np.allclose(sp.Vh @ sp.Vh.conj().T, np.eye(7))
    assert np.allclose(np.sort(sp.s), np.sort(np.linalg.svd(M, compute_uv=False)[:r]))
    D = GradedMatrix.dirac(M)
    assert abs(str_index(D, 0.5, sp) - str_index(D, 0.5, spectral_decomposition(D))) < 1e-12
    with pytest.raises(ValueError):
        monomial_spectrum(np.ones((2, 2)))


@pytest.mark.parametrize("beta", [0.4 + 0.3j, -1.1j, 2.5])
def test_displacement_routes_agree(beta):
    lag = displacement_laguerre(beta, 30)
    assert np.max(np.abs(displacement(beta, 30) - lag)) < 1e-12
    assert np.max(np.abs(displacement_expm(beta, 30) - lag)) < 1e-12


def test_displacement_unitary_on_large_truncation():
    G = displacement(1.7 - 0.4j, 400)
    # the top-left block of a unitary is nearly unitary away from the cut
    assert np.max(np.abs((G.conj().T @ G)[:200, :200] - np.eye(200))) < 1e-12


def test_guiding_center_commutation():
    k = 3
    X, Y = guiding_center(1, 0, k), guiding_center(0, 1, k)
    assert np.allclose(X @ Y, np.exp(2j * math.pi / k) * Y @ X) or np.allclose(
        X @ Y, np.exp(-2j * math.pi / k) * Y @ X
    )


# -- kernel decay ---------------------------------------------------------------------------------


def test_decay_scan_circle():
    m = circle_dirac(64, 1)
    rows = kernel_decay_scan(m, [0.25, 0.5, 1.0])
    for r in rows:
        assert r["g_slope"] < 0 and r["f_slope"] < 0
        assert np.isfinite(r["f_diag"]) and r["g_diag"] <= math.exp(r["g_intercept"])


def test_decay_scaling_like_inverse_t():
    rows = kernel_decay_scan(decay_model(), [0.25, 0.5])
    s1, s2 = rows[0]["g_slope"], rows[1]["g_slope"]
    assert min(r["g_r2"] for r in rows) >= 0.99
    assert abs((s1 / s2) / 2 - 1) < 0.25


def test_decay_fit_degenerate():
    with pytest.raises(ValueError, match="degenerate"):
        decay_fit(np.ones(5), np.ones(5))
    d = np.linspace(0, 10, 200)
    fit = decay_fit(d, np.exp(-1.5 * d) * (2 + np.cos(6 * d)))
    assert abs(fit["slope"] + 1.5) < 0.05 and fit["r2"] > 0.99


# -- pairing -------------------------------------------------------------------------------------


def circle_functions():
    return (
        SmoothFunction(lambda p: np.cos(p[..., 0]), None, "cos"),
        SmoothFunction(lambda p: np.sin(p[..., 0]), None, "sin"),
        SmoothFunction(lambda p: np.cos(2 * p[..., 0]), None, "cos 2"),
    )


def test_zero_cochain_pairing_is_supertrace():
    for m in (circle_dirac(64, 2), torus_dirac(16, 1)):
        for t in (0.1, 0.5, 1.0):
            ind = m.ind(t)
            assert tau_pairing(Cochain.constant(), ind, m) == ind.trace()
            assert abs(ind.trace() - m.index) < 1e-9


def test_tuple_and_operator_routes_agree():
    m = circle_dirac(16, 1)
    ind = m.ind(0.4)
    f = circle_functions()
    psi = Cochain.antisymmetrized([f[0], f[1]])
    assert abs(tau_pairing(psi, ind, m, route="tuples")) < 1e-12
    psi3 = Cochain.antisymmetrized(f)
    a = tau_pairing(psi3, ind, m, route="operator")
    b = tau_pairing(psi3, ind, m, route="tuples")
    assert abs(a - b) < 1e-10 * max(1.0, abs(a))
    assert tau_pairing(Cochain.constant(), ind, m, route="tuples") == pytest.approx(ind.trace(), abs=1e-12)


def test_zero_cochain_pairs_to_zero():
    m = circle_dirac(16, 1)
    zero = Cochain.constant(0.0)
    assert tau_pairing(zero, m.ind(0.5), m) == 0


def test_growth_refusal():
    m = circle_dirac(64, 1)
    psi = Cochain.exponential(3, 50.0, m.geometry)
    with pytest.raises(GrowthError, match="not dominated"):
        tau_pairing(psi, m.ind(0.5), m, route="tuples")
    with pytest.raises(GrowthError):
        pairing_limit_sweep(psi, m, [0.5])
    mild = Cochain.exponential(2, 0.01, m.geometry)
    assert np.isfinite(tau_pairing(mild, m.ind(0.5), m, route="tuples", decay_rate=2.0))


def test_pairing_target_value():
    assert pairing_prefactor(2, 1) == pytest.approx(1 / (4j * math.pi))
    m = torus_dirac(16, 1, levels=64)
    psi = Cochain.antisymmetrized(torus_test_functions(m.geometry.periods[0]))
    assert abs(pairing_target(psi, m) - (-1.5j * math.pi)) < 1e-12


def test_levels_for():
    assert levels_for(0.08) == 1082
    assert math.exp(-(0.5**2) * 2 * (levels_for(0.5) - 1)) < 1e-6


def test_pairing_sweep_coarse_trend():
    m = torus_dirac(16, 1, levels=256)
    psi = Cochain.antisymmetrized(torus_test_functions(m.geometry.periods[0]))
    rep = pairing_limit_sweep(psi, m, [1.0, 0.7, 0.5, 0.35])
    assert rep["monotone"]
    taus = [r["tau"] for r in rep["rows"]]
    # frozen from a 1082-level run; the heat weight beyond 256 levels is negligible here
    for got, want in zip(taus, [-0.016027j, -0.237904j, -0.958261j, -2.122975j]):
        assert abs(got - want) < 1e-6
    q0 = pairing_limit_sweep(Cochain.constant(), m, [1.0, 0.5])
    assert all(abs(r["tau"] - 1) < 1e-9 for r in q0["rows"])
