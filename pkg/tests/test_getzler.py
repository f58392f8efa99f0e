import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from indexbench.algebra_core import I, DimensionError, ExtElem
from indexbench.charclass import EndForm, SkewMat
from indexbench.clifford import CliffElem
from indexbench.getzler import (
    Symbol,
    beta_minus_delta_exact,
    beta_q,
    beta_q_closed_form,
    constant_combination_check,
    curv_pairing,
    delta_q,
    gaussian_xi_integral,
    gaussian_xi_moment,
    model_hamiltonian,
    pointwise,
    random_curv,
    random_symbol,
    rescaling_consistency,
    star,
    star_checks,
)

# 20-digit values from an mpmath quadrature at 30 digits of working precision
BETA = {1: 0.40546510810816438198, 2: 0.064538521137571171673, 3: 0.0063255587767794038179}
DELTA = {1: 0.23879844144149771531, 2: 0.047871854470904505006, 3: 0.0051350825863032133417}


def two_form(N, a, b, c=1):
    return ExtElem.monomial(N, (a, b), Fraction(c))


# -- star product -----------------------------------------------------------------


def test_star_with_zero_curvature_is_pointwise():
    rng = random.Random(0)
    zero = SkewMat.from_upper(2, 4, {})
    for _ in range(10):
        a, b = random_symbol(2, 4, rng), random_symbol(2, 4, rng)
        assert star(a, b, zero) == pointwise(a, b)


def test_star_commutator_of_linear_symbols():
    N = 4
    R = curv_pairing(2, N, {(1, 2): two_form(N, 1, 2, 3) + two_form(N, 3, 4, -1)})
    x1, x2 = Symbol.xi(2, N, 1), Symbol.xi(2, N, 2)
    comm = star(x1, x2, R) - star(x2, x1, R)
    assert comm == Symbol.const(2, N, R.entries[0][1] * Fraction(-1, 2))


@pytest.mark.parametrize("seed", range(3))
def test_star_commutators_all_pairs_n3(seed):
    N = 6
    R = random_curv(3, N, random.Random(seed))
    for i in range(1, 4):
        for j in range(1, 4):
            xi, xj = Symbol.xi(3, N, i), Symbol.xi(3, N, j)
            got = star(xi, xj, R) - star(xj, xi, R)
            assert got == Symbol.const(3, N, R.entries[i - 1][j - 1] * Fraction(-1, 2))


@given(seed=st.integers(0, 10_000))
def test_star_associative(seed):
    rng = random.Random(seed)
    R = random_curv(2, 6, rng)
    a, b, c = (random_symbol(2, 6, rng) for _ in range(3))
    assert star(star(a, b, R), c, R) == star(a, star(b, c, R), R)


@given(seed=st.integers(0, 10_000))
def test_star_bilinear(seed):
    rng = random.Random(seed)
    R = random_curv(2, 6, rng)
    a, b, c = (random_symbol(2, 6, rng) for _ in range(3))
    k = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    assert star(a * k + b, c, R) == star(a, c, R) * k + star(b, c, R)
    assert star(c, a + b, R) == star(c, a, R) + star(c, b, R)


def test_star_rejects_mismatch():
    with pytest.raises(DimensionError):
        star(Symbol.xi(2, 4, 1), Symbol.xi(2, 4, 2), random_curv(2, 6, random.Random(0)))
    with pytest.raises(ValueError):
        curv_pairing(2, 4, {(1, 2): ExtElem.gen(4, 1)})


def test_star_checks_summary():
    rep = star_checks(instances=5)
    assert rep["passed"]
    assert rep["associative"] == rep["degenerate_to_pointwise"] == 5


# -- model Hamiltonian ------------------------------------------------------------------


def test_hamiltonian_flat():
    H = model_hamiltonian(SkewMat.from_upper(2, 2, {}))
    assert H.as_symbol() == Symbol.norm_sq(2, 2)
    assert not H.first_order_terms() and not H.second_order_terms()
    Q = ExtElem.const(2, 3)
    assert model_hamiltonian(SkewMat.from_upper(2, 2, {}), Q).as_symbol() == Symbol.norm_sq(2, 2) - Symbol.const(2, 2, Q)


def test_hamiltonian_cross_term_n2():
    N = 2
    r = two_form(N, 1, 2, 2)
    H = model_hamiltonian(curv_pairing(2, N, {(1, 2): r}))
    assert H.first_order_terms() == {(1, 2): r * Fraction(-1, 2), (2, 1): r * Fraction(1, 2)}
    # R^2 is a 4-form, so it vanishes over two generators
    assert not H.second_order_terms()
    # -1/2 R(xi, d/dxi) acting on xi_2 gives -1/2 R_12 xi_1
    got = H.apply(Symbol.xi(2, N, 2))
    expected = pointwise(Symbol.norm_sq(2, N), Symbol.xi(2, N, 2)) + Symbol.xi(2, N, 1, r * Fraction(-1, 2))
    assert got == expected


def test_hamiltonian_second_order_term():
    N = 4
    R = curv_pairing(2, N, {(1, 2): two_form(N, 1, 2) + two_form(N, 3, 4)})
    H = model_hamiltonian(R)
    # (R^2)_11 = R_12 R_21 = -2 K1K2K3K4, so the coefficient is +1/8
    top = ExtElem.monomial(N, (1, 2, 3, 4))
    assert H.second_order_terms() == {(1, 1): top * Fraction(1, 8), (2, 2): top * Fraction(1, 8)}


# -- Gaussian integration ---------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gaussian_xi_integral_examples(n):
    one = Symbol.const(n, 0, 1, gaussian=True)
    assert abs(gaussian_xi_integral(one).scalar_part() - math.pi ** (n / 2)) < 1e-12
    sq = Symbol(n, 0, {(2,) + (0,) * (n - 1): ExtElem.one(0)}, gaussian=True)
    assert abs(gaussian_xi_integral(sq).scalar_part() - math.pi ** (n / 2) / 2) < 1e-12
    assert not gaussian_xi_moment(Symbol.xi(n, 0, 1).with_gaussian()).terms


def test_gaussian_integral_needs_weight():
    with pytest.raises(ValueError):
        gaussian_xi_integral(Symbol.const(2, 0, 1))


@given(seed=st.integers(0, 10_000), i=st.integers(1, 2))
def test_wick_recursion(seed, i):
    p = random_symbol(2, 2, random.Random(seed), degree=4)
    lhs = gaussian_xi_moment(pointwise(Symbol.xi(2, 2, i), pointwise(Symbol.xi(2, 2, i), p)).with_gaussian())
    # integration by parts against exp(-|xi|^2): int xi_i^2 p = 1/2 int p + 1/4 int p''
    d2 = p.derivative(i).derivative(i)
    rhs = gaussian_xi_moment(p.with_gaussian()) * Fraction(1, 2) + gaussian_xi_moment(d2.with_gaussian()) * Fraction(1, 4)
    assert lhs == rhs


def test_trace_density_examples():
    from indexbench.getzler import trace_density

    N = 0
    f = ExtElem.const(N, Fraction(7, 2))
    balanced = EndForm.diagonal([f], [f], N)
    assert not trace_density(Symbol.const(2, N, balanced, gaussian=True), 2).terms
    plain = EndForm.diagonal([f], [], N)
    got = trace_density(Symbol.const(2, N, plain, gaussian=True), 2).scalar_part()
    assert abs(got - 3.5 * math.pi / (2 * math.pi) ** 2) < 1e-15
    top = CliffElem(2, N, {0b11: ExtElem.one(N)})
    got = trace_density(Symbol.const(2, N, top, gaussian=True), 2).scalar_part()
    assert abs(complex(got) - 2j / (4 * math.pi)) < 1e-15


# -- constants --------------------------------------------------------------------------------


def test_beta_delta_order_one():
    assert abs(beta_q(1) - math.log(1.5)) < 1e-10
    assert abs(delta_q(1) - (math.log(1.5) - 1 / 6)) < 1e-10
    assert beta_q(0) == 1


@pytest.mark.parametrize("q", [1, 2, 3])
def test_beta_delta_frozen(q):
    assert abs(beta_q(q) - BETA[q]) < 1e-10
    assert abs(delta_q(q) - DELTA[q]) < 1e-10
    assert abs(beta_q_closed_form(q) - BETA[q]) < 1e-12


@pytest.mark.parametrize("q,exact", [(1, Fraction(1, 6)), (2, Fraction(1, 60)), (3, Fraction(1, 840))])
def test_beta_minus_delta_exact(q, exact):
    assert beta_minus_delta_exact(q) == exact
    assert abs(BETA[q] - DELTA[q] - float(exact)) < 1e-15


@pytest.mark.parametrize("q,target", [(1, Fraction(1, 2)), (2, Fraction(1, 12)), (3, Fraction(1, 120))])
def test_constant_combination(q, target):
    rep = constant_combination_check(q)
    assert rep["passed"] and rep["target_exact"] == str(target)
    assert rep["abs_err"] < 1e-8
    # one T term, 2q T_j terms and 2q Z_j terms
    total = rep["weight_T"] + 2 * q * (rep["weight_Tj_each"] + rep["weight_Zj_each"])
    assert abs(total - float(target)) < 1e-8


def test_constant_combination_range():
    with pytest.raises(ValueError):
        constant_combination_check(4)


def test_rescaling_consistency():
    N = 2
    R = curv_pairing(2, N, {(1, 2): two_form(N, 1, 2)})
    rep = rescaling_consistency([1, 2], R)
    assert rep["quadratic_matches"] and rep["t_exponent_of_product"] == 0
    # the curvature remainder is 2i * i * (-1/4) R(df, e_k)
    assert rep["remainders"][1] == R.entries[1][0] * (2 * I * I * Fraction(-1, 4) * 2)
