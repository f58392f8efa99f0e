"""The Clifford algebra C_n tensored with an exterior algebra of coefficients.

Generators satisfy ``g_j g_k + g_k g_j = 2 delta_jk``.  An element of
A (x) C_n is stored as a map from a Clifford bitmask ``I`` (the monomial
``g_I`` with ascending indices) to an :class:`ExtElem` coefficient written on
the left.  Mixed products follow the Koszul rule

    (a (x) g_I)(b (x) g_K) = (-1)^{|I| |b|} (a ^ b) (x) g_I g_K.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from numbers import Complex

import numpy as np

from .algebra_core import (
    DimensionError,
    ExtElem,
    GaussianRational,
    I,
    ParityError,
    exp_scalar,
    full_mask,
    i_power,
    indices_of,
    reorder_sign,
)


def supertrace_unit(n: int):
    """``Str(g_1...g_n) = (2i)^{n/2}`` as an exact scalar."""
    if n % 2:
        raise ValueError("n must be even")
    return i_power(n // 2) * 2 ** (n // 2)


class CliffElem:
    """Element of A (x) C_n with ``n`` Clifford and ``N`` exterior generators."""

    __slots__ = ("n", "N", "terms")

    def __init__(self, n: int, N: int, terms=None):
        self.n = n
        self.N = N
        clean = {}
        if terms:
            for cmask, coeff in terms.items():
                if cmask >> n:
                    raise DimensionError(f"Clifford mask {cmask:#b} exceeds n={n}")
                if coeff.n != N:
                    raise DimensionError("coefficient lives in the wrong exterior algebra")
                if coeff.terms:
                    clean[cmask] = coeff
        self.terms = clean

    @classmethod
    def scalar(cls, n, N, c=Fraction(1)):
        return cls(n, N, {0: ExtElem.const(N, c)})

    @classmethod
    def gamma(cls, n, N, *indices, coeff=None):
        """``coeff (x) g_{i1} g_{i2} ...`` for 1-based indices in the given order."""
        out = cls(n, N, {0: coeff if coeff is not None else ExtElem.one(N)})
        for i in indices:
            if not 1 <= i <= n:
                raise DimensionError(f"gamma_{i} not in 1..{n}")
            out = out * cls(n, N, {1 << (i - 1): ExtElem.one(N)})
        return out

    @classmethod
    def from_ext(cls, n, a: ExtElem):
        return cls(n, a.n, {0: a})

    def __repr__(self):
        parts = []
        for cmask in sorted(self.terms, key=lambda m: (m.bit_count(), indices_of(m))):
            label = "g" + "".join(map(str, indices_of(cmask))) if cmask else "1"
            parts.append(f"[{self.terms[cmask]!r}]{label}")
        return f"CliffElem(n={self.n}, " + (" + ".join(parts) or "0") + ")"

    def __eq__(self, other):
        if isinstance(other, CliffElem):
            return (self.n, self.N) == (other.n, other.N) and self.terms == other.terms
        if isinstance(other, (Complex, GaussianRational)) and other == 0:
            return not self.terms
        return NotImplemented

    __hash__ = None

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, cmask: int) -> ExtElem:
        return self.terms.get(cmask, ExtElem(self.N))

    def _same(self, other):
        if (self.n, self.N) != (other.n, other.N):
            raise DimensionError("Clifford elements live in different algebras")

    def parity(self) -> int:
        """Total parity ``|I| + grade`` of a homogeneous element."""
        seen = set()
        for cmask, coeff in self.terms.items():
            for emask in coeff.terms:
                seen.add((cmask.bit_count() + emask.bit_count()) & 1)
        if len(seen) > 1:
            raise ParityError("element is not homogeneous")
        return seen.pop() if seen else 0

    def is_exact(self):
        return all(c.is_exact() for c in self.terms.values())

    def max_abs(self) -> float:
        return max((c.max_abs() for c in self.terms.values()), default=0.0)

    def to_float(self):
        return CliffElem(self.n, self.N, {m: c.to_float() for m, c in self.terms.items()})

    def __add__(self, other):
        if isinstance(other, (Complex, GaussianRational)):
            other = CliffElem.scalar(self.n, self.N, other)
        if not isinstance(other, CliffElem):
            return NotImplemented
        self._same(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return CliffElem(self.n, self.N, out)

    __radd__ = __add__

    def __neg__(self):
        return CliffElem(self.n, self.N, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, CliffElem):
            return cliff_mul(self, other)
        if isinstance(other, (Complex, GaussianRational)):
            return CliffElem(self.n, self.N, {m: c * other for m, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (Complex, GaussianRational)):
            return self * other
        if isinstance(other, ExtElem):
            # even or odd coefficient placed on the left: no sign
            return CliffElem.from_ext(self.n, other) * self
        return NotImplemented

    def __truediv__(self, k):
        return CliffElem(self.n, self.N, {m: c / k for m, c in self.terms.items()})


def cliff_mul(u: CliffElem, v: CliffElem) -> CliffElem:
    """Product in A (x) C_n with Clifford contraction and the Koszul sign."""
    u._same(v)
    acc: dict[tuple[int, int], object] = {}
    for ca, A in u.terms.items():
        odd_a = ca.bit_count() & 1
        for cb, B in v.terms.items():
            csign = reorder_sign(ca, cb)
            cm = ca ^ cb
            for ea, x in A.terms.items():
                for eb, y in B.terms.items():
                    if ea & eb:
                        continue
                    s = csign * reorder_sign(ea, eb)
                    if odd_a and eb.bit_count() & 1:
                        s = -s
                    key = (cm, ea | eb)
                    c = x * y
                    acc[key] = acc.get(key, 0) + (c if s > 0 else -c)
    grouped: dict[int, dict[int, object]] = {}
    for (cm, em), c in acc.items():
        grouped.setdefault(cm, {})[em] = c
    return CliffElem(u.n, u.N, {cm: ExtElem(u.N, d) for cm, d in grouped.items()})


def supertrace(u: CliffElem) -> ExtElem:
    """A-linear supertrace: picks the ``g_1...g_n`` coefficient times ``(2i)^{n/2}``."""
    top = u.terms.get(full_mask(u.n))
    if top is None:
        return ExtElem(u.N)
    return top * supertrace_unit(u.n)


# ``str`` is a builtin; expose the operation under its mathematical name too.
str_ = supertrace


def c_map(z, N: int = 0) -> CliffElem:
    """``c(z) = i * sum_k z_k g_k``."""
    n = len(z)
    out = CliffElem(n, N)
    for k, zk in enumerate(z, start=1):
        if zk != 0:
            out = out + CliffElem(n, N, {1 << (k - 1): ExtElem.const(N, I * zk)})
    return out


def cliff_exp(u: CliffElem, tol: float = 1e-16, max_terms: int = 400) -> CliffElem:
    """Exponential by Taylor series.

    The series stops on its own when every term carries a positive exterior
    degree (nilpotent input, exact arithmetic preserved).  A pure scalar
    part commutes with everything and is split off.  Any other numeric part
    makes the series infinite; the coefficients then switch to floating point
    and summation stops after two consecutive terms below ``tol`` relative
    to the sum.
    """
    scalar_part = u.coeff(0).scalar_part()
    if scalar_part != 0:
        u = u - CliffElem.scalar(u.n, u.N, scalar_part)
    numeric = any(0 in c.terms for c in u.terms.values())
    if numeric:
        u = u.to_float()
    out = CliffElem.scalar(u.n, u.N, Fraction(1))
    term = out
    small = 0
    for k in range(1, max_terms):
        term = cliff_mul(term, u) / k
        if not term.terms:
            break
        out = out + term
        if numeric:
            # two consecutive negligible terms: a lone small term can be an
            # accidental cancellation in one Clifford component
            small = small + 1 if term.max_abs() <= tol * max(out.max_abs(), 1.0) else 0
            if small == 2:
                break
    else:
        raise RuntimeError("exponential series did not converge")
    if scalar_part != 0:
        out = out * exp_scalar(scalar_part)
    return out


def str_cyclic_check(a: CliffElem, b: CliffElem) -> bool:
    """``Str(ab) == (-1)^{|a||b|} Str(ba)`` for homogeneous ``a`` and ``b``."""
    pa, pb = a.parity(), b.parity()
    lhs = supertrace(a * b)
    rhs = supertrace(b * a)
    if pa and pb:
        rhs = -rhs
    return lhs == rhs


# ---------------------------------------------------------------------------
# matrix representation oracle

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_ID2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class MatrixRep:
    """Concrete gamma matrices plus the functional ``M -> tr(chirality @ M)``."""

    n: int
    gammas: tuple
    chirality: np.ndarray

    def monomial(self, cmask: int) -> np.ndarray:
        out = np.eye(2 ** (self.n // 2), dtype=complex)
        for i in indices_of(cmask):
            out = out @ self.gammas[i - 1]
        return out

    def supertrace(self, matrix: np.ndarray) -> complex:
        return complex(np.trace(self.chirality @ matrix))

    def to_matrix(self, coeffs: dict[int, complex]) -> np.ndarray:
        """Matrix of ``sum_I coeffs[I] g_I`` for scalar coefficients."""
        dim = 2 ** (self.n // 2)
        out = np.zeros((dim, dim), dtype=complex)
        for cmask, c in coeffs.items():
            out += complex(c) * self.monomial(cmask)
        return out


def build_matrix_rep(n: int) -> MatrixRep:
    """Jordan-Wigner style gammas ``Z..Z X 1..1`` and ``Z..Z Y 1..1``."""
    if n % 2:
        raise ValueError("n must be even")
    if n > 12:
        raise ValueError("matrix representation limited to n <= 12")
    m = n // 2
    gammas = []
    for j in range(m):
        for pauli in (_PAULI_X, _PAULI_Y):
            factors = [_PAULI_Z] * j + [pauli] + [_ID2] * (m - j - 1)
            g = np.ones((1, 1), dtype=complex)
            for f in factors:
                g = np.kron(g, f)
            gammas.append(g)
    top = np.eye(2**m, dtype=complex)
    for g in gammas:
        top = top @ g
    # top is proportional to a chirality operator; fix the scale so that the
    # functional sends the full monomial to (2i)^{n/2}
    scale = complex(supertrace_unit(n)) / np.trace(top @ top)
    return MatrixRep(n, tuple(gammas), scale * top)


def supertrace_via_matrices(u: CliffElem, rep: MatrixRep) -> dict[int, complex]:
    """Coefficientwise supertrace computed in the matrix representation.

    Returns a map exterior-mask -> complex value, comparable with
    ``supertrace(u).terms`` after conversion to complex.
    """
    if rep.n != u.n:
        raise DimensionError("representation size does not match")
    per_ext: dict[int, dict[int, complex]] = {}
    for cmask, coeff in u.terms.items():
        for emask, c in coeff.terms.items():
            per_ext.setdefault(emask, {})[cmask] = c
    out = {}
    for emask, coeffs in per_ext.items():
        value = rep.supertrace(rep.to_matrix(coeffs))
        if abs(value) > 0:
            out[emask] = value
    return out


# ---------------------------------------------------------------------------
# batch checks


def random_homogeneous(n: int, N: int, parity: int, rng: random.Random, terms: int = 4, span: int = 3) -> CliffElem:
    """Random exact element whose monomials all have total parity ``parity``."""
    out = CliffElem(n, N)
    for _ in range(terms):
        cmask = rng.randrange(1 << n)
        grades = [g for g in range(N + 1) if (g + cmask.bit_count()) % 2 == parity]
        while not grades:
            cmask = rng.randrange(1 << n)
            grades = [g for g in range(N + 1) if (g + cmask.bit_count()) % 2 == parity]
        g = rng.choice(grades)
        idx = tuple(sorted(rng.sample(range(1, N + 1), g)))
        coeff = ExtElem.monomial(N, idx, GaussianRational(rng.randint(-span, span), rng.randint(-span, span)))
        out = out + CliffElem(n, N, {cmask: coeff})
    return out


def clifford_checks(n: int, instances: int = 50, seed: int = 0, N: int = 3) -> dict:
    """Relations, supertrace normalization, graded cyclicity and the matrix-representation cross-check."""
    if n % 2 or n < 2:
        raise ValueError("n must be even")
    rng = random.Random(seed)
    relations = all(
        CliffElem.gamma(n, 0, j, k) + CliffElem.gamma(n, 0, k, j)
        == CliffElem.scalar(n, 0, 2 if j == k else 0)
        for j in range(1, n + 1)
        for k in range(1, n + 1)
    )
    unit = supertrace(CliffElem.gamma(n, 0, *range(1, n + 1))) == ExtElem.const(0, supertrace_unit(n))
    lower = all(not supertrace(CliffElem(n, 0, {m: ExtElem.one(0)})).terms for m in range((1 << n) - 1))
    cyclic = 0
    for _ in range(instances):
        a = random_homogeneous(n, N, rng.randrange(2), rng)
        b = random_homogeneous(n, N, rng.randrange(2), rng)
        cyclic += str_cyclic_check(a, b)
    rep = build_matrix_rep(n)
    worst = 0.0
    for _ in range(instances):
        u = random_homogeneous(n, 0, rng.randrange(2), rng) * random_homogeneous(n, 0, rng.randrange(2), rng)
        direct = supertrace(u).terms.get(0, 0)
        via = supertrace_via_matrices(u, rep).get(0, 0)
        worst = max(worst, abs(complex(direct) - via))
    return {
        "n": n,
        "instances": instances,
        "seed": seed,
        "relations": relations,
        "supertrace_unit": str(supertrace_unit(n)),
        "unit_normalized": unit,
        "lower_monomials_traceless": lower,
        "graded_cyclic": cyclic,
        "matrix_rep_max_abs_deviation": worst,
        "passed": relations and unit and lower and cyclic == instances and worst < 1e-12,
    }
