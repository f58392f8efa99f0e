import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from indexbench.algebra_core import DimensionError, ExtElem, I, ParityError, gaussian
from indexbench.clifford import (
    CliffElem,
    build_matrix_rep,
    c_map,
    clifford_checks,
    random_homogeneous,
    str_cyclic_check,
    supertrace,
    supertrace_unit,
    supertrace_via_matrices,
)

from strategies import even_elems


def g(n, *idx, N=0):
    return CliffElem.gamma(n, N, *idx)


def test_relations():
    assert g(2, 1) * g(2, 1) == CliffElem.scalar(2, 0)
    assert g(2, 1) * g(2, 2) == CliffElem(2, 0, {0b11: ExtElem.one(0)})
    # matrix oracle: (g1 g2)^2 is minus the identity
    rep = build_matrix_rep(2)
    m = rep.gammas[0] @ rep.gammas[1]
    assert np.allclose(m @ m, -np.eye(2))
    assert (g(2, 1, 2) * g(2, 1, 2)) == CliffElem.scalar(2, 0, -1)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_anticommutation_all_pairs(n):
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            s = g(n, i) * g(n, j) + g(n, j) * g(n, i)
            assert s == CliffElem.scalar(n, 0, 2 if i == j else 0)


def test_supertrace_examples():
    assert supertrace(g(2, 1, 2)) == ExtElem.const(0, 2 * I)
    assert supertrace(CliffElem.scalar(2, 0)).terms == {}
    a = CliffElem(2, 2, {0b01: ExtElem.gen(2, 1)})
    b = CliffElem(2, 2, {0b10: ExtElem.gen(2, 2)})
    # Koszul sign from moving g1 past J2, then Str(g12) = 2i
    assert supertrace(a * b) == ExtElem.monomial(2, (1, 2), -2 * I)


@pytest.mark.parametrize("n,value", [(2, 2 * I), (4, Fraction(-4)), (6, -8 * I)])
def test_supertrace_unit(n, value):
    assert supertrace_unit(n) == value


def test_supertrace_unit_rejects_odd():
    with pytest.raises(ValueError):
        supertrace_unit(3)


def test_c_map_examples():
    assert c_map([1, 0]) == CliffElem(2, 0, {0b01: ExtElem.const(0, I)})
    assert c_map([0, 0]) == 0
    z = [gaussian(1, 2), Fraction(3)]
    sq = c_map(z) * c_map(z)
    assert sq == CliffElem.scalar(2, 0, -(z[0] * z[0] + z[1] * z[1]))


@pytest.mark.parametrize("n", [2, 4, 6])
def test_matrix_rep_properties(n):
    rep = build_matrix_rep(n)
    dim = 2 ** (n // 2)
    for i, gi in enumerate(rep.gammas):
        assert np.allclose(gi @ gi, np.eye(dim))
        for gj in rep.gammas[i + 1:]:
            assert np.allclose(gi @ gj + gj @ gi, 0)
    assert np.isclose(rep.supertrace(rep.monomial((1 << n) - 1)), complex(supertrace_unit(n)))


@pytest.mark.parametrize("n", [2, 4, 6])
def test_basis_supertrace_matches_matrices_on_monomials(n):
    rep = build_matrix_rep(n)
    for m in range(1 << n):
        u = CliffElem(n, 0, {m: ExtElem.one(0)})
        direct = complex(supertrace(u).coeff(0))
        assert np.isclose(direct, rep.supertrace(rep.monomial(m)), atol=1e-12)


def test_basis_supertrace_matches_matrices_random_n4():
    rng = random.Random(11)
    rep = build_matrix_rep(4)
    for _ in range(100):
        u = random_homogeneous(4, 0, rng.randrange(2), rng, terms=6)
        direct = supertrace(u).terms.get(0, 0)
        via = supertrace_via_matrices(u, rep).get(0, 0)
        assert abs(complex(direct) - via) < 1e-12


def test_matrix_rep_rejects_odd():
    with pytest.raises(ValueError):
        build_matrix_rep(5)


def test_cyclic_examples():
    assert str_cyclic_check(g(2, 1), g(2, 2))
    assert str_cyclic_check(CliffElem.scalar(2, 0), g(2, 1, 2))


@pytest.mark.parametrize("n", [2, 4, 6])
def test_graded_cyclicity_random(n):
    rng = random.Random(n)
    for _ in range(100):
        a = random_homogeneous(n, 3, rng.randrange(2), rng)
        b = random_homogeneous(n, 3, rng.randrange(2), rng)
        assert str_cyclic_check(a, b)


def test_cyclic_rejects_inhomogeneous():
    u = g(2, 1) + CliffElem.scalar(2, 0)
    with pytest.raises(ParityError):
        str_cyclic_check(u, u)


@given(even_elems, st.integers(0, 2**31))
def test_supertrace_is_linear_over_even_forms(alpha, seed):
    rng = random.Random(seed)
    u = random_homogeneous(4, 5, rng.randrange(2), rng)
    assert supertrace(CliffElem.from_ext(4, alpha) * u) == alpha * supertrace(u)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        g(2, 1) * g(4, 1)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_batch_checks_pass(n):
    rep = clifford_checks(n, instances=30, seed=3)
    assert rep["passed"]
    assert rep["graded_cyclic"] == 30
