import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from indexbench.algebra_core import ExtElem, exp_even, mask_of
from indexbench.charclass import (
    BranchError,
    EndForm,
    EquivCurvatureData,
    SkewMat,
    SurfaceGeometry,
    a_hat,
    a_hat_inv,
    chern_character,
    det_half_sinh_ratio,
    det_half_sinh_ratio_numeric,
    determinant,
    equivariant_curvature,
    euler_density,
    first_chern_density,
    flat_torus,
    integrate_density,
    monopole_sphere,
    pf_sub,
    pfaffian,
    pfaffian_rowexp,
    round_sphere,
)
from indexbench.mathai_quillen import random_nilpotent_skew

fracs = st.fractions(min_value=-4, max_value=4, max_denominator=5)


@st.composite
def exact_skew(draw, n):
    upper = {(i, j): draw(fracs) for i in range(1, n + 1) for j in range(i + 1, n + 1)}
    return SkewMat.from_upper(n, 0, upper)


def two_form(N, a, b, c=1):
    return ExtElem.monomial(N, (a, b), Fraction(c))


def tr_sq(w):
    n = w.n
    out = ExtElem(w.N)
    for i in range(n):
        for j in range(n):
            out = out + w.entries[i][j] * w.entries[j][i]
    return out


# -- Pfaffians ----------------------------------------------------------------


def test_pfaffian_2x2():
    a = Fraction(7, 3)
    assert pfaffian(SkewMat.from_upper(2, 0, {(1, 2): a})) == ExtElem.const(0, a)


def test_pfaffian_4x4_generic():
    N = 12
    gens = iter(range(1, N + 1, 2))
    upper = {}
    for i in range(1, 5):
        for j in range(i + 1, 5):
            k = next(gens)
            upper[(i, j)] = two_form(N, k, k + 1)
    w = SkewMat.from_upper(4, N, upper)
    e = lambda i, j: upper[(i, j)]  # noqa: E731
    expected = e(1, 2) * e(3, 4) - e(1, 3) * e(2, 4) + e(1, 4) * e(2, 3)
    assert pfaffian(w) == expected


@pytest.mark.parametrize("n", [2, 4, 6])
@given(data=st.data())
def test_pfaffian_squared_is_determinant(n, data):
    w = data.draw(exact_skew(n))
    assert pfaffian(w) * pfaffian(w) == determinant(w.entries)


def test_matching_sum_equals_row_expansion():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.choice([2, 4, 6])
        w = random_nilpotent_skew(n, 8, rng)
        assert pfaffian(w) == pfaffian_rowexp(w)


def test_pfaffian_odd_size_is_zero():
    w = SkewMat.from_upper(3, 0, {(1, 2): 1, (1, 3): 2, (2, 3): 3})
    assert pfaffian(w).terms == {}


def test_pf_sub_conventions():
    w = SkewMat.from_upper(4, 0, {(1, 2): 5, (3, 4): 2})
    assert pf_sub(w, 0) == ExtElem.one(0)
    assert pf_sub(w, mask_of([1, 2, 3])).terms == {}
    assert pf_sub(w, mask_of([1, 2])) == ExtElem.const(0, 5)


def test_skew_validation():
    one = ExtElem.one(0)
    with pytest.raises(ValueError):
        SkewMat([[ExtElem(0), one], [one, ExtElem(0)]])


# -- series -------------------------------------------------------------------


def test_det_half_numeric_2x2():
    th = 1.1
    w = SkewMat.from_upper(2, 0, {(1, 2): th})
    # eigenvalues +-i th, so sinh(w)/w has eigenvalues sin(th)/th twice
    assert abs(det_half_sinh_ratio(w).coeff(0) - math.sin(th) / th) < 1e-14


def test_det_half_numeric_matches_eigen_route():
    rng = np.random.default_rng(0)
    for _ in range(5):
        a = rng.normal(size=(4, 4))
        a = (a - a.T) * 0.4
        w = SkewMat.from_array(a)
        assert abs(det_half_sinh_ratio(w).coeff(0) - det_half_sinh_ratio_numeric(a)) < 1e-13


def test_det_half_branch_error():
    with pytest.raises(BranchError):
        det_half_sinh_ratio(SkewMat.from_upper(2, 0, {(1, 2): 3.5}))


def test_det_half_nilpotent_leading_terms():
    rng = random.Random(2)
    w = random_nilpotent_skew(4, 4, rng)
    # with four generators tr(w^2) is top degree, so the series stops there
    expected = ExtElem.one(4) + tr_sq(w) * Fraction(1, 12)
    assert det_half_sinh_ratio(w) == expected


def test_a_hat_inv_examples():
    zero = SkewMat.from_upper(4, 4, {})
    assert a_hat_inv(zero) == ExtElem.one(4)
    # a surface-type curvature: 2-form entries in two generators
    surf = SkewMat.from_upper(2, 2, {(1, 2): two_form(2, 1, 2, 3)})
    assert a_hat_inv(surf) == ExtElem.one(2)
    w = random_nilpotent_skew(4, 4, random.Random(8))
    assert a_hat_inv(w) == ExtElem.one(4) + tr_sq(w) * Fraction(1, 48)


@pytest.mark.parametrize("seed", range(5))
def test_a_hat_times_inverse_is_one(seed):
    w = random_nilpotent_skew(4, 8, random.Random(seed))
    assert a_hat(w) * a_hat_inv(w) == ExtElem.one(8)


def test_equivariant_curvature_assembly():
    N = 4
    Om = SkewMat.from_upper(2, N, {(1, 2): two_form(N, 1, 2)})
    mu = np.array([[0.0, 0.5], [-0.5, 0.0]])
    data = EquivCurvatureData(Om, {"X": mu})
    assert equivariant_curvature(data, 0) == Om
    full = equivariant_curvature(data, "X")
    assert full.entries[0][1] == Om.entries[0][1] + ExtElem.const(N, 0.5)
    only_mu = equivariant_curvature(EquivCurvatureData(SkewMat.from_upper(2, N, {}), {"X": mu}), "X")
    assert only_mu.entries[0][1] == ExtElem.const(N, 0.5)
    # substituting the combined matrix into the series equals the series of the sum
    assert a_hat_inv(full) == det_half_sinh_ratio(full / 2)
    with pytest.raises(KeyError):
        equivariant_curvature(data, "Y")


# -- Chern character -------------------------------------------------------------


def test_chern_character_examples():
    N = 4
    F = two_form(N, 1, 2) + two_form(N, 3, 4, 2)
    assert chern_character(EndForm.zero(1, 0, N)) == ExtElem.one(N)
    assert chern_character(EndForm.zero(3, 0, N)) == ExtElem.const(N, 3)
    got = chern_character(EndForm.diagonal([F], [0], N))
    assert got == exp_even(F) - ExtElem.one(N)


def _random_endform(rng, rp, rm, N):
    m = [[ExtElem(N) for _ in range(rp + rm)] for _ in range(rp + rm)]
    for i in range(rp + rm):
        for j in range(rp + rm):
            a, b = sorted(rng.sample(range(1, N + 1), 2))
            m[i][j] = two_form(N, a, b, rng.randint(-2, 2))
    return EndForm(rp, rm, m)


@pytest.mark.parametrize("seed", range(4))
def test_chern_character_additive_and_multiplicative(seed):
    rng = random.Random(seed)
    N = 6
    A = _random_endform(rng, 1, 1, N)
    B = _random_endform(rng, 2, 1, N)
    assert chern_character(A.direct_sum(B)) == chern_character(A) + chern_character(B)
    assert chern_character(A.tensor_sum(B)) == chern_character(A) * chern_character(B)


# -- surfaces ---------------------------------------------------------------------


def test_sphere_area_and_gauss_bonnet():
    r = 1.7
    geom = round_sphere(r)
    assert abs(integrate_density(np.ones_like(geom.weights), geom) - 4 * math.pi * r * r) < 1e-10
    assert abs(integrate_density(euler_density(geom), geom) - 2) < 1e-8


@pytest.mark.parametrize("k", [-2, 0, 1, 3])
def test_first_chern_number(k):
    assert abs(integrate_density(first_chern_density(monopole_sphere(k)), monopole_sphere(k)) - k) < 1e-8
    torus = flat_torus(2.0, 3.0, 16, k)
    assert abs(integrate_density(first_chern_density(torus), torus) - k) < 1e-8
    assert abs(integrate_density(euler_density(torus), torus)) < 1e-12


def test_integrate_density_node_mismatch():
    with pytest.raises(ValueError):
        integrate_density(np.ones(3), round_sphere())


def test_geometry_json_round_trip(tmp_path):
    geom = monopole_sphere(2, n_theta=6, n_phi=8)
    path = tmp_path / "g.json"
    geom.dump(path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"nodes", "meta"} and set(doc["nodes"][0]) == {"weight", "K", "F"}
    back = SurfaceGeometry.load(path)
    assert np.array_equal(back.weights, geom.weights) and np.array_equal(back.F, geom.F)
