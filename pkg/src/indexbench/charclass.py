"""Pfaffians, power series of curvature matrices, A-hat, Chern character and
integration of densities over sampled surfaces.

Matrices whose entries are even exterior-algebra elements are plain nested
lists of :class:`ExtElem`; :class:`SkewMat` adds the skew-symmetry contract on
top.  Entries commute (they are even), so the usual matrix identities hold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable

import numpy as np

from .algebra_core import (
    DimensionError,
    ExtElem,
    ParityError,
    exp_even,
    indices_of,
)


class BranchError(ValueError):
    """Numeric input outside the region where the series branch is unambiguous."""


# ---------------------------------------------------------------------------
# matrices of even forms


def mat_zero(n, N):
    return [[ExtElem(N) for _ in range(n)] for _ in range(n)]


def mat_identity(n, N):
    out = mat_zero(n, N)
    for i in range(n):
        out[i][i] = ExtElem.one(N)
    return out


def mat_mul(a, b):
    n, m, p = len(a), len(b), len(b[0]) if b else 0
    N = a[0][0].n
    out = [[ExtElem(N) for _ in range(p)] for _ in range(n)]
    for i in range(n):
        for k in range(m):
            aik = a[i][k]
            if not aik.terms:
                continue
            row = b[k]
            for j in range(p):
                if row[j].terms:
                    out[i][j] = out[i][j] + aik * row[j]
    return out


def mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a, c):
    return [[x * c for x in row] for row in a]


def mat_trace(a):
    N = a[0][0].n if a else 0
    out = ExtElem(N)
    for i in range(len(a)):
        out = out + a[i][i]
    return out


def mat_is_zero(a):
    return all(not x.terms for row in a for x in row)


def mat_max_abs(a):
    return max((x.max_abs() for row in a for x in row), default=0.0)


def mat_numeric_part(a) -> np.ndarray:
    return np.array([[complex(x.scalar_part()) for x in row] for row in a], dtype=complex)


def mat_has_numeric_part(a):
    return any(x.scalar_part() != 0 for row in a for x in row)


class SkewMat:
    """Skew-symmetric ``n x n`` matrix with even :class:`ExtElem` entries."""

    __slots__ = ("n", "N", "entries")

    def __init__(self, entries):
        n = len(entries)
        if n == 0:
            raise ValueError("empty matrix; use SkewMat.empty(N)")
        N = entries[0][0].n
        for i in range(n):
            if len(entries[i]) != n:
                raise DimensionError("matrix is not square")
            for j in range(n):
                e = entries[i][j]
                if e.n != N:
                    raise DimensionError("entries live in different exterior algebras")
                if not e.is_even():
                    raise ParityError(f"entry ({i + 1},{j + 1}) is not even")
                if e != -entries[j][i]:
                    raise ValueError(f"not skew at ({i + 1},{j + 1})")
        self.n = n
        self.N = N
        self.entries = [list(row) for row in entries]

    @classmethod
    def from_upper(cls, n, N, upper: dict):
        """Build from ``{(i, j): entry}`` with 1-based ``i < j``; entries may be scalars."""
        m = mat_zero(n, N)
        for (i, j), v in upper.items():
            if not 1 <= i < j <= n:
                raise ValueError(f"bad upper-triangle key {(i, j)}")
            e = v if isinstance(v, ExtElem) else ExtElem.const(N, v)
            m[i - 1][j - 1] = e
            m[j - 1][i - 1] = -e
        return cls(m)

    @classmethod
    def from_array(cls, array, N=0):
        """Numeric skew matrix (grade-0 entries)."""
        a = np.asarray(array)
        n = a.shape[0]
        upper = {}
        for i in range(n):
            for j in range(i + 1, n):
                v = a[i, j]
                upper[(i + 1, j + 1)] = complex(v) if np.iscomplexobj(a) else float(v)
        if not np.allclose(a, -a.T, atol=0):
            raise ValueError("array is not skew-symmetric")
        return cls.from_upper(n, N, upper)

    def __repr__(self):
        return f"SkewMat(n={self.n}, N={self.N})"

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        if not isinstance(other, SkewMat):
            return NotImplemented
        return self.entries == other.entries

    __hash__ = None

    def __add__(self, other):
        return SkewMat(mat_add(self.entries, other.entries))

    def __neg__(self):
        return self * -1

    def __mul__(self, c):
        return SkewMat(mat_scale(self.entries, c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return SkewMat([[x / c for x in row] for row in self.entries])

    def numeric_part(self) -> np.ndarray:
        return mat_numeric_part(self.entries)

    def is_numeric(self):
        return all(set(x.terms) <= {0} for row in self.entries for x in row)

    def is_nilpotent(self):
        return not mat_has_numeric_part(self.entries)

    def spectral_radius(self) -> float:
        if self.n == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.numeric_part()))))

    def sub(self, mask: int) -> "SkewMat | None":
        """Principal submatrix on the 1-based index set ``mask`` (``None`` if empty)."""
        idx = [i - 1 for i in indices_of(mask)]
        if not idx:
            return None
        return SkewMat([[self.entries[i][j] for j in idx] for i in idx])


# ---------------------------------------------------------------------------
# Pfaffians


def _matchings(items):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for k, partner in enumerate(rest):
        remaining = rest[:k] + rest[k + 1 :]
        for tail in _matchings(remaining):
            yield ((first, partner),) + tail


def _perm_sign(seq):
    inversions = sum(1 for a, b in combinations(seq, 2) if a > b)
    return -1 if inversions & 1 else 1


def pfaffian(omega: SkewMat) -> ExtElem:
    """Signed sum over perfect matchings; zero for odd size."""
    n, N = omega.n, omega.N
    if n % 2:
        return ExtElem(N)
    total = ExtElem(N)
    for matching in _matchings(tuple(range(n))):
        term = ExtElem.const(N, _perm_sign([i for pair in matching for i in pair]))
        for i, j in matching:
            term = term * omega.entries[i][j]
            if not term.terms:
                break
        total = total + term
    return total


def pfaffian_rowexp(omega: SkewMat) -> ExtElem:
    """Expansion along the first row, used as an independent check."""
    N = omega.N

    def rec(idx):
        if not idx:
            return ExtElem.one(N)
        if len(idx) % 2:
            return ExtElem(N)
        i0 = idx[0]
        out = ExtElem(N)
        for k in range(1, len(idx)):
            a = omega.entries[i0][idx[k]]
            if not a.terms:
                continue
            rest = idx[1:k] + idx[k + 1 :]
            term = a * rec(rest)
            out = out + (term if k % 2 else -term)
        return out

    return rec(tuple(range(omega.n)))


def pf_sub(omega: SkewMat, mask: int) -> ExtElem:
    """Pfaffian of the principal submatrix on ``mask``; ``Pf(empty) = 1``."""
    if mask == 0:
        return ExtElem.one(omega.N)
    if mask.bit_count() % 2:
        return ExtElem(omega.N)
    return pfaffian(omega.sub(mask))


def determinant(a) -> ExtElem:
    """Leibniz expansion over commuting entries (small n only)."""
    from itertools import permutations

    n = len(a)
    N = a[0][0].n
    out = ExtElem(N)
    for perm in permutations(range(n)):
        term = ExtElem.const(N, _perm_sign(perm))
        for i, j in enumerate(perm):
            term = term * a[i][j]
            if not term.terms:
                break
        out = out + term
    return out


# ---------------------------------------------------------------------------
# power series


@lru_cache(maxsize=None)
def bernoulli(m: int) -> Fraction:
    """Bernoulli number ``B_m`` with ``B_1 = -1/2``."""
    if m == 0:
        return Fraction(1)
    total = Fraction(0)
    for k in range(m):
        total += math.comb(m + 1, k) * bernoulli(k)
    return -total / (m + 1)


@dataclass(frozen=True)
class PowerSeries:
    """``sum_k coeff(k) x^k`` with radius of convergence ``radius``."""

    name: str
    coeff: Callable[[int], Fraction]
    radius: float
    scalar_fn: Callable[[complex], complex] | None = None


def _exp_coeff(k):
    return Fraction(1, math.factorial(k))


def _log_sinh_ratio_coeff(k):
    if k == 0 or k % 2:
        return Fraction(0)
    return Fraction(2**k) * bernoulli(k) / (k * math.factorial(k))


def _log_sinh_ratio(z):
    z = complex(z)
    if abs(z) < 1e-4:
        return z * z / 6 - z**4 / 180
    return complex(np.log(np.sinh(z) / z))


EXP = PowerSeries("exp", _exp_coeff, math.inf, lambda z: complex(np.exp(z)))
LOG_SINH_RATIO = PowerSeries("log(sinh x / x)", _log_sinh_ratio_coeff, math.pi, _log_sinh_ratio)


def analytic_even(series: PowerSeries, omega, tol: float = 1e-14, max_terms: int = 2000):
    """Apply ``series`` to a matrix of even forms.

    ``omega`` is a :class:`SkewMat` or a nested list of even entries.  With a
    nilpotent matrix the sum terminates exactly; with a numeric part the
    spectral radius must be inside the radius of convergence and summation
    stops when the tail bound falls below ``tol`` relative to the sum.
    """
    entries = omega.entries if isinstance(omega, SkewMat) else omega
    n = len(entries)
    N = entries[0][0].n
    numeric = mat_has_numeric_part(entries)
    if numeric:
        rho = float(np.max(np.abs(np.linalg.eigvals(mat_numeric_part(entries)))))
        if rho >= series.radius:
            raise BranchError(
                f"spectral radius {rho:.6g} outside the convergence radius {series.radius:.6g}"
            )
        entries = [[x.to_float() for x in row] for row in entries]
        ratio = rho / series.radius if math.isfinite(series.radius) else 0.0
    out = mat_scale(mat_identity(n, N), series.coeff(0))
    power = mat_identity(n, N)
    small = 0
    for k in range(1, max_terms):
        power = mat_mul(power, entries)
        if mat_is_zero(power):
            break
        c = series.coeff(k)
        if c == 0:
            continue
        term = mat_scale(power, c)
        out = mat_add(out, term)
        if numeric:
            # geometric tail bound from the spectral ratio
            tail = mat_max_abs(term) / (1 - ratio) if ratio < 1 else mat_max_abs(term)
            small = small + 1 if tail <= tol * max(mat_max_abs(out), 1.0) else 0
            if small >= 2:
                break
    else:
        raise RuntimeError(f"{series.name} series did not converge in {max_terms} terms")
    return out


def det_half_sinh_ratio(omega: SkewMat) -> ExtElem:
    """``det^{1/2}(sinh(omega)/omega) = exp(1/2 tr log(sinh(omega)/omega))``."""
    log_m = analytic_even(LOG_SINH_RATIO, omega)
    return exp_even(mat_trace(log_m) * Fraction(1, 2))


def det_half_sinh_ratio_numeric(omega: np.ndarray) -> complex:
    """Eigenvalue route for a numeric skew matrix (used as an oracle)."""
    ev = np.linalg.eigvals(np.asarray(omega, dtype=complex))
    if ev.size and np.max(np.abs(ev)) >= math.pi:
        raise BranchError("spectral radius must stay below pi")
    logs = [_log_sinh_ratio(z) for z in ev]
    return complex(np.exp(0.5 * np.sum(logs)))


def a_hat_inv(Omega: SkewMat) -> ExtElem:
    """``det^{1/2}(sinh(Omega/2)/(Omega/2))``: the inverse A-hat form."""
    return det_half_sinh_ratio(Omega / 2)


def a_hat(Omega: SkewMat) -> ExtElem:
    """``det^{1/2}((Omega/2)/sinh(Omega/2))``."""
    log_m = analytic_even(LOG_SINH_RATIO, Omega / 2)
    return exp_even(mat_trace(log_m) * Fraction(-1, 2))


# ---------------------------------------------------------------------------
# equivariant curvature


@dataclass
class EquivCurvatureData:
    """Curvature 2-form matrix plus a moment map sampled at named points.

    ``moments`` maps a Lie-algebra sample token to a numeric skew matrix.
    The token ``0`` always maps to the zero matrix.
    """

    curvature: SkewMat
    moments: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.curvature.n
        for X, mu in self.moments.items():
            mu = np.asarray(mu)
            if mu.shape != (n, n) or not np.allclose(mu, -mu.T):
                raise ValueError(f"moment at {X!r} is not an n x n skew matrix")
        if 0 in self.moments and np.any(np.asarray(self.moments[0]) != 0):
            raise ValueError("the moment at X = 0 must vanish")


def equivariant_curvature(data: EquivCurvatureData, X) -> SkewMat:
    """``Omega + mu(X)``."""
    if X == 0 or X is None:
        return data.curvature
    if X not in data.moments:
        raise KeyError(f"no moment sample for X={X!r}")
    mu = SkewMat.from_array(data.moments[X], data.curvature.N)
    return data.curvature + mu


# ---------------------------------------------------------------------------
# graded endomorphisms and the Chern character


class EndForm:
    """Block matrix of even forms on a graded space of rank ``(r_plus | r_minus)``."""

    __slots__ = ("r_plus", "r_minus", "N", "entries")

    def __init__(self, r_plus: int, r_minus: int, entries):
        r = r_plus + r_minus
        if len(entries) != r or any(len(row) != r for row in entries):
            raise DimensionError("block sizes do not match the rank")
        N = entries[0][0].n if r else 0
        for row in entries:
            for x in row:
                if not x.is_even():
                    raise ParityError("EndForm entries must be even")
        self.r_plus, self.r_minus, self.N = r_plus, r_minus, N
        self.entries = [list(row) for row in entries]

    @classmethod
    def zero(cls, r_plus, r_minus, N):
        return cls(r_plus, r_minus, mat_zero(r_plus + r_minus, N))

    @classmethod
    def diagonal(cls, plus, minus, N):
        vals = list(plus) + list(minus)
        m = mat_zero(len(vals), N)
        for i, v in enumerate(vals):
            m[i][i] = v if isinstance(v, ExtElem) else ExtElem.const(N, v)
        return cls(len(plus), len(minus), m)

    def __repr__(self):
        return f"EndForm(rank=({self.r_plus}|{self.r_minus}), N={self.N})"

    def __add__(self, other):
        return EndForm(self.r_plus, self.r_minus, mat_add(self.entries, other.entries))

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, EndForm):
            return NotImplemented
        return (self.r_plus, self.r_minus) == (other.r_plus, other.r_minus) and self.entries == other.entries

    __hash__ = None

    @classmethod
    def identity(cls, r_plus, r_minus, N):
        return cls.diagonal([1] * r_plus, [1] * r_minus, N)

    def is_zero(self):
        return mat_is_zero(self.entries)

    def __mul__(self, c):
        if isinstance(c, EndForm):
            return EndForm(self.r_plus, self.r_minus, mat_mul(self.entries, c.entries))
        return EndForm(self.r_plus, self.r_minus, mat_scale(self.entries, c))

    __rmul__ = __mul__

    def supertrace(self) -> ExtElem:
        out = ExtElem(self.N)
        for i in range(self.r_plus):
            out = out + self.entries[i][i]
        for i in range(self.r_plus, self.r_plus + self.r_minus):
            out = out - self.entries[i][i]
        return out

    def direct_sum(self, other: "EndForm") -> "EndForm":
        """Block sum, keeping even blocks before odd blocks."""
        pa, ma, pb, mb = self.r_plus, self.r_minus, other.r_plus, other.r_minus
        order_a = list(range(pa)) + [None] * pb + list(range(pa, pa + ma)) + [None] * mb
        order_b = [None] * pa + list(range(pb)) + [None] * ma + list(range(pb, pb + mb))
        r = pa + pb + ma + mb
        m = mat_zero(r, self.N)
        for i in range(r):
            for j in range(r):
                if order_a[i] is not None and order_a[j] is not None:
                    m[i][j] = self.entries[order_a[i]][order_a[j]]
                elif order_b[i] is not None and order_b[j] is not None:
                    m[i][j] = other.entries[order_b[i]][order_b[j]]
        return EndForm(pa + pb, ma + mb, m)

    def tensor_sum(self, other: "EndForm") -> "EndForm":
        """``Q1 (x) 1 + 1 (x) Q2`` on the graded tensor product."""
        ra, rb = self.r_plus + self.r_minus, other.r_plus + other.r_minus
        pairs = [(i, j) for i in range(ra) for j in range(rb)]
        parity = lambda i, r_plus: 0 if i < r_plus else 1  # noqa: E731
        pairs.sort(key=lambda p: (parity(p[0], self.r_plus) + parity(p[1], other.r_plus)) % 2)
        r = len(pairs)
        m = mat_zero(r, self.N)
        for a, (i, j) in enumerate(pairs):
            for b, (k, l) in enumerate(pairs):
                val = ExtElem(self.N)
                if j == l:
                    val = val + self.entries[i][k]
                if i == k:
                    val = val + other.entries[j][l]
                m[a][b] = val
        n_plus = sum(
            1 for i, j in pairs if (parity(i, self.r_plus) + parity(j, other.r_plus)) % 2 == 0
        )
        return EndForm(n_plus, r - n_plus, m)


def mat_exp(entries, tol=1e-16, max_terms=400):
    """Exponential of a matrix of even forms (exact when nilpotent)."""
    n = len(entries)
    N = entries[0][0].n
    numeric = mat_has_numeric_part(entries)
    if numeric:
        entries = [[x.to_float() for x in row] for row in entries]
    out = mat_identity(n, N)
    term = mat_identity(n, N)
    small = 0
    for k in range(1, max_terms):
        term = mat_scale(mat_mul(term, entries), Fraction(1, k))
        if mat_is_zero(term):
            return out
        out = mat_add(out, term)
        if numeric:
            small = small + 1 if mat_max_abs(term) <= tol * max(mat_max_abs(out), 1.0) else 0
            if small >= 2:
                return out
    raise RuntimeError("matrix exponential did not converge")


def chern_character(Q: EndForm) -> ExtElem:
    """``Str(exp Q)``."""
    r = Q.r_plus + Q.r_minus
    if r == 0:
        return ExtElem(Q.N)
    return EndForm(Q.r_plus, Q.r_minus, mat_exp(Q.entries)).supertrace()


# ---------------------------------------------------------------------------
# surfaces


@dataclass
class SurfaceGeometry:
    """Quadrature sample of a closed surface.

    ``weights`` already include the area element, so ``sum(weights)`` is the
    area.  ``K`` is the Gauss curvature and ``F`` the field strength of an
    optional line bundle (normalized so that ``sum(w * F) / (2 pi)`` is the
    degree).
    """

    weights: np.ndarray
    K: np.ndarray
    F: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.K = np.asarray(self.K, dtype=float)
        self.F = np.asarray(self.F, dtype=float)
        if not (self.weights.shape == self.K.shape == self.F.shape):
            raise DimensionError("node arrays have different lengths")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))

    def to_json(self) -> dict:
        nodes = [
            {"weight": float(w), "K": float(k), "F": float(f)}
            for w, k, f in zip(self.weights, self.K, self.F)
        ]
        return {"nodes": nodes, "meta": dict(self.meta)}

    @classmethod
    def from_json(cls, doc: dict) -> "SurfaceGeometry":
        nodes = doc["nodes"]
        return cls(
            np.array([nd["weight"] for nd in nodes]),
            np.array([nd.get("K", 0.0) for nd in nodes]),
            np.array([nd.get("F", 0.0) for nd in nodes]),
            dict(doc.get("meta", {})),
        )

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def round_sphere(radius: float = 1.0, n_theta: int = 32, n_phi: int = 64, flux: int = 0):
    """Gauss-Legendre in ``cos(theta)`` times a uniform ``phi`` grid.

    ``flux`` attaches a monopole line bundle with uniform field strength.
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    weights = np.repeat(w, n_phi) * (2 * math.pi / n_phi) * radius**2
    area = 4 * math.pi * radius**2
    K = np.full(weights.shape, 1.0 / radius**2)
    F = np.full(weights.shape, 2 * math.pi * flux / area)
    return SurfaceGeometry(
        weights, K, F, {"kind": "round_sphere", "radius": radius, "flux": flux, "area": area}
    )


def flat_torus(L1: float = 1.0, L2: float = 1.0, N: int = 32, flux: int = 0):
    area = L1 * L2
    weights = np.full(N * N, area / (N * N))
    K = np.zeros(N * N)
    F = np.full(N * N, 2 * math.pi * flux / area)
    return SurfaceGeometry(weights, K, F, {"kind": "flat_torus", "L": [L1, L2], "flux": flux, "area": area})


def monopole_sphere(flux: int, radius: float = 1.0, n_theta: int = 32, n_phi: int = 64):
    return round_sphere(radius, n_theta, n_phi, flux)


BUILTIN_GEOMETRIES = {
    "sphere": round_sphere,
    "torus": flat_torus,
    "monopole": monopole_sphere,
}


def integrate_density(values, geom: SurfaceGeometry):
    """Quadrature sum ``sum_i w_i * values_i`` of a top-degree density."""
    values = np.asarray(values)
    if values.shape != geom.weights.shape:
        raise DimensionError(
            f"density has {values.size} samples, geometry has {geom.weights.size} nodes"
        )
    return complex(np.sum(geom.weights * values)) if np.iscomplexobj(values) else float(
        np.sum(geom.weights * values)
    )


def euler_density(geom: SurfaceGeometry) -> np.ndarray:
    """Gauss-Bonnet integrand ``K / (2 pi)``."""
    return geom.K / (2 * math.pi)


def first_chern_density(geom: SurfaceGeometry) -> np.ndarray:
    """Chern-Weil integrand ``F / (2 pi)``."""
    return geom.F / (2 * math.pi)


def index_density(geom: SurfaceGeometry, rank: int = 1) -> np.ndarray:
    """Top-degree part of A-hat ^ ch for a twisted Dirac operator on a surface.

    On a surface the A-hat form is 1 (its first correction has degree 4) and
    the top part of the Chern character is the first Chern form.
    """
    del rank  # the degree-2 part of ch does not see the rank
    return first_chern_density(geom)


__all__ = [
    "BranchError",
    "SkewMat",
    "EndForm",
    "EquivCurvatureData",
    "SurfaceGeometry",
    "PowerSeries",
    "EXP",
    "LOG_SINH_RATIO",
    "pfaffian",
    "pfaffian_rowexp",
    "pf_sub",
    "determinant",
    "analytic_even",
    "det_half_sinh_ratio",
    "det_half_sinh_ratio_numeric",
    "a_hat_inv",
    "a_hat",
    "equivariant_curvature",
    "chern_character",
    "mat_exp",
    "integrate_density",
    "round_sphere",
    "flat_torus",
    "monopole_sphere",
    "euler_density",
    "first_chern_density",
    "index_density",
]

