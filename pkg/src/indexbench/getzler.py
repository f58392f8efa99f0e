"""Getzler symbol calculus on R^n: the curvature-twisted star product, the
model harmonic-oscillator Hamiltonian, Gaussian xi-integration and the
numeric constants that assemble the cyclic pairing formula.

A :class:`Symbol` is a polynomial in commuting variables ``xi_1..xi_n`` whose
coefficients are base forms (:class:`ExtElem`), Clifford-valued forms
(:class:`CliffElem`) or graded endomorphisms (:class:`EndForm`).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from scipy import integrate

from .algebra_core import DimensionError, ExtElem, I
from .charclass import EndForm, SkewMat
from .clifford import CliffElem, supertrace
from .mathai_quillen import gaussian_moment


# ---------------------------------------------------------------------------
# coefficient helpers


def _is_zero(c) -> bool:
    if isinstance(c, EndForm):
        return c.is_zero()
    return not c.terms


def _cmul(a, b):
    """Product of two coefficients, promoting forms into the richer type."""
    if isinstance(a, ExtElem) and isinstance(b, ExtElem):
        return a * b
    if isinstance(a, CliffElem) or isinstance(b, CliffElem):
        n = a.n if isinstance(a, CliffElem) else b.n
        if isinstance(a, ExtElem):
            a = CliffElem.from_ext(n, a)
        if isinstance(b, ExtElem):
            b = CliffElem.from_ext(n, b)
        return a * b
    if isinstance(a, EndForm) and isinstance(b, EndForm):
        return a * b
    if isinstance(a, EndForm):
        return a * b
    return b * a  # ExtElem times EndForm: entries are even, order is irrelevant


def _cscale(c, k):
    return c * k


def _promote(c, like):
    """Bring ``c`` to the coefficient type of ``like`` (identity for same type)."""
    if type(c) is type(like):
        return c
    if isinstance(c, ExtElem) and isinstance(like, CliffElem):
        return CliffElem.from_ext(like.n, c)
    if isinstance(c, ExtElem) and isinstance(like, EndForm):
        return EndForm.identity(like.r_plus, like.r_minus, like.N) * c
    raise TypeError(f"cannot combine {type(c).__name__} with {type(like).__name__}")


def _cadd(a, b):
    if type(a) is not type(b):
        if isinstance(a, ExtElem):
            a = _promote(a, b)
        else:
            b = _promote(b, a)
    return a + b


def _coeff_N(c) -> int:
    return c.N if not isinstance(c, ExtElem) else c.n


# ---------------------------------------------------------------------------
# symbols


def _add_alpha(a, b):
    return tuple(x + y for x, y in zip(a, b))


class Symbol:
    """Polynomial symbol ``sum_alpha c_alpha xi^alpha``, optionally times ``exp(-|xi|^2)``."""

    __slots__ = ("n", "N", "terms", "gaussian")

    def __init__(self, n: int, N: int, terms=None, gaussian: bool = False):
        self.n, self.N, self.gaussian = n, N, gaussian
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != n or min(alpha, default=0) < 0:
                raise DimensionError(f"bad exponent {alpha} for n={n}")
            if _coeff_N(c) != N:
                raise DimensionError("coefficient lives in the wrong exterior algebra")
            if not _is_zero(c):
                clean[alpha] = c
        self.terms = clean

    @classmethod
    def const(cls, n, N, c=1, gaussian=False):
        coeff = c if not isinstance(c, (int, Fraction, float, complex)) else ExtElem.const(N, c)
        return cls(n, N, {(0,) * n: coeff}, gaussian)

    @classmethod
    def xi(cls, n, N, i, coeff=1):
        """``coeff * xi_i`` for 1-based ``i``."""
        alpha = [0] * n
        alpha[i - 1] = 1
        c = coeff if isinstance(coeff, (ExtElem, CliffElem, EndForm)) else ExtElem.const(N, coeff)
        return cls(n, N, {tuple(alpha): c})

    @classmethod
    def norm_sq(cls, n, N):
        """``|xi|^2``."""
        terms = {}
        for i in range(n):
            alpha = [0] * n
            alpha[i] = 2
            terms[tuple(alpha)] = ExtElem.one(N)
        return cls(n, N, terms)

    def __repr__(self):
        w = ", gaussian" if self.gaussian else ""
        return f"Symbol(n={self.n}, terms={len(self.terms)}{w})"

    def _same(self, other):
        if (self.n, self.N, self.gaussian) != (other.n, other.N, other.gaussian):
            raise DimensionError("symbols are not compatible")

    def __eq__(self, other):
        if not isinstance(other, Symbol):
            return NotImplemented
        if (self.n, self.N, self.gaussian) != (other.n, other.N, other.gaussian):
            return False
        if self.terms.keys() != other.terms.keys():
            return False
        return all(_is_zero(_cadd(self.terms[k], -other.terms[k])) for k in self.terms)

    __hash__ = None

    def __add__(self, other):
        self._same(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = _cadd(out[k], c) if k in out else c
        return Symbol(self.n, self.N, out, self.gaussian)

    def __neg__(self):
        return Symbol(self.n, self.N, {k: -c for k, c in self.terms.items()}, self.gaussian)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k):
        """Scalar multiple."""
        return Symbol(self.n, self.N, {a: _cscale(c, k) for a, c in self.terms.items()}, self.gaussian)

    __rmul__ = __mul__

    def with_gaussian(self) -> "Symbol":
        return Symbol(self.n, self.N, self.terms, gaussian=True)

    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def derivative(self, i: int) -> "Symbol":
        """``d/d xi_i`` of the polynomial part (1-based ``i``)."""
        if self.gaussian:
            raise ValueError("differentiate the polynomial part before attaching the weight")
        out = {}
        for alpha, c in self.terms.items():
            if alpha[i - 1]:
                a = list(alpha)
                a[i - 1] -= 1
                out[tuple(a)] = _cscale(c, alpha[i - 1])
        return Symbol(self.n, self.N, out)

    def coefficient_at(self, alpha):
        return self.terms.get(tuple(alpha))


def pointwise(a: Symbol, b: Symbol) -> Symbol:
    """Pointwise product ``a(xi) b(xi)`` (coefficients multiplied in order)."""
    a._same(b)
    out = {}
    for alpha, ca in a.terms.items():
        for beta, cb in b.terms.items():
            k = _add_alpha(alpha, beta)
            p = _cmul(ca, cb)
            out[k] = _cadd(out[k], p) if k in out else p
    return Symbol(a.n, a.N, out, a.gaussian)


# ---------------------------------------------------------------------------
# curvature pairing and the star product


def curv_pairing(n: int, N: int, upper: dict) -> SkewMat:
    """Skew matrix of 2-forms ``R_ij`` from ``{(i, j): ExtElem}`` with ``i < j``."""
    R = SkewMat.from_upper(n, N, upper)
    for row in R.entries:
        for x in row:
            if x.terms and set(m.bit_count() for m in x.terms) != {2}:
                raise ValueError("curvature pairing entries must be 2-forms")
    return R


def star(a: Symbol, b: Symbol, R: SkewMat) -> Symbol:
    """``exp(-1/4 sum R_ij d/dxi_i d/deta_j) a(xi) b(eta)`` restricted to ``eta = xi``.

    The exponential series terminates because each application lowers the
    polynomial degree of both factors.
    """
    a._same(b)
    if a.gaussian:
        raise ValueError("star acts on polynomial symbols; attach weights afterwards")
    if R.n != a.n or R.N != a.N:
        raise DimensionError("curvature pairing does not match the symbols")
    pairs = [(i, j, R.entries[i][j]) for i in range(a.n) for j in range(a.n) if R.entries[i][j].terms]
    out = {}
    quarter = Fraction(-1, 4)
    for alpha, ca in a.terms.items():
        for beta, cb in b.terms.items():
            prod = _cmul(ca, cb)
            layer = {(alpha, beta): ExtElem.one(a.N)}
            m = 0
            while layer:
                for (al, be), w in layer.items():
                    k = _add_alpha(al, be)
                    p = _cmul(w, prod)
                    out[k] = _cadd(out[k], p) if k in out else p
                m += 1
                nxt = {}
                for (al, be), w in layer.items():
                    for i, j, r in pairs:
                        if al[i] and be[j]:
                            al2 = al[:i] + (al[i] - 1,) + al[i + 1:]
                            be2 = be[:j] + (be[j] - 1,) + be[j + 1:]
                            v = w * r * (quarter * al[i] * be[j] / m)
                            key = (al2, be2)
                            nxt[key] = nxt[key] + v if key in nxt else v
                layer = {k: v for k, v in nxt.items() if v.terms}
    return Symbol(a.n, a.N, out)


# ---------------------------------------------------------------------------
# model Hamiltonian


@dataclass
class ModelHamiltonian:
    """``|xi|^2 - 1/2 R(xi, d/dxi) - 1/16 (R ^ R)(d/dxi, d/dxi) - Q`` as an operator on symbols."""

    R: SkewMat
    Q: object = None
    RR: list = field(init=False)

    def __post_init__(self):
        n = self.R.n
        E = self.R.entries
        self.RR = [
            [sum((E[i][k] * E[k][j] for k in range(n)), ExtElem(self.R.N)) for j in range(n)]
            for i in range(n)
        ]

    @property
    def n(self):
        return self.R.n

    @property
    def N(self):
        return self.R.N

    def first_order_terms(self):
        """``{(i, j): c}`` meaning ``c * xi_i d/dxi_j`` (1-based)."""
        out = {}
        for i in range(self.n):
            for j in range(self.n):
                if self.R.entries[i][j].terms:
                    out[(i + 1, j + 1)] = self.R.entries[i][j] * Fraction(-1, 2)
        return out

    def second_order_terms(self):
        """``{(i, j): c}`` meaning ``c * d/dxi_i d/dxi_j`` (1-based)."""
        out = {}
        for i in range(self.n):
            for j in range(self.n):
                if self.RR[i][j].terms:
                    out[(i + 1, j + 1)] = self.RR[i][j] * Fraction(-1, 16)
        return out

    def apply(self, p: Symbol) -> Symbol:
        """Act on a polynomial symbol."""
        if (p.n, p.N) != (self.n, self.N):
            raise DimensionError("symbol does not match the Hamiltonian")
        out = pointwise(Symbol.norm_sq(self.n, self.N), p)
        for (i, j), c in self.first_order_terms().items():
            out = out + pointwise(Symbol.xi(self.n, self.N, i, c), p.derivative(j))
        for (i, j), c in self.second_order_terms().items():
            out = out + pointwise(Symbol.const(self.n, self.N, c), p.derivative(i).derivative(j))
        if self.Q is not None:
            Q = self.Q if not isinstance(self.Q, (int, Fraction)) else ExtElem.const(self.N, self.Q)
            out = out - pointwise(Symbol.const(self.n, self.N, Q), p)
        return out

    def as_symbol(self) -> Symbol:
        """Multiplicative part ``|xi|^2 - Q`` (the derivative terms act on what follows)."""
        out = Symbol.norm_sq(self.n, self.N)
        if self.Q is not None:
            out = out - Symbol.const(self.n, self.N, self.Q)
        return out


def model_hamiltonian(R: SkewMat, Q=None) -> ModelHamiltonian:
    return ModelHamiltonian(R, Q)


# ---------------------------------------------------------------------------
# Gaussian integration and trace density


def gaussian_xi_moment(p: Symbol):
    """``pi^{-n/2} int p(xi) exp(-|xi|^2) d xi`` coefficientwise and exactly."""
    if not p.gaussian:
        raise ValueError("symbol carries no Gaussian weight")
    out = None
    for alpha, c in p.terms.items():
        m = gaussian_moment(alpha)
        if m == 0:
            continue
        term = _cscale(c, m)
        out = term if out is None else _cadd(out, term)
    return out if out is not None else ExtElem(p.N)


def gaussian_xi_integral(p: Symbol):
    """``int p(xi) exp(-|xi|^2) d xi`` over R^n."""
    return _cscale(gaussian_xi_moment(p), math.pi ** (p.n / 2))


def _str(c) -> ExtElem:
    if isinstance(c, CliffElem):
        return supertrace(c)
    if isinstance(c, EndForm):
        return c.supertrace()
    return c


def trace_density(p: Symbol, n: int) -> ExtElem:
    """``(2 pi)^{-n} int Str(p(x, xi)) d xi``: a base form, still to be integrated in x."""
    if n != p.n:
        raise DimensionError("dimension does not match the symbol")
    return _str(gaussian_xi_moment(p)) * (math.pi ** (n / 2) / (2 * math.pi) ** n)


# ---------------------------------------------------------------------------
# constants of the cyclic pairing


def beta_q(q: int, tol: float = 1e-12) -> float:
    """``int_{[1,2]^q} (1 + s_1 + ... + s_q)^{-q} ds`` by adaptive cube quadrature."""
    if q == 0:
        return 1.0
    val, _ = integrate.nquad(
        lambda *s: (1.0 + sum(s)) ** (-q), [(1.0, 2.0)] * q, opts={"epsabs": tol, "epsrel": tol}
    )
    return val


def delta_q(q: int, tol: float = 1e-12) -> float:
    """``int_{[1,2]^q} S (1 + S)^{-(q+1)} ds`` with ``S = s_1 + ... + s_q``."""
    if q == 0:
        return 0.0
    val, _ = integrate.nquad(
        lambda *s: sum(s) * (1.0 + sum(s)) ** (-(q + 1)),
        [(1.0, 2.0)] * q,
        opts={"epsabs": tol, "epsrel": tol},
    )
    return val


def cube_difference(q: int, antiderivative) -> object:
    """``int_{[0,1]^q} F(1 + q + sum u) du`` as a q-th finite difference of ``F^{(-q)}``."""
    return sum(
        (-1) ** (q - k) * math.comb(q, k) * antiderivative(1 + q + k) for k in range(q + 1)
    )


def beta_q_closed_form(q: int) -> float:
    """Finite-difference closed form of ``beta_q`` (logarithms of integers)."""
    if q == 0:
        return 1.0
    c = (-1) ** (q - 1) / math.factorial(q - 1)
    return cube_difference(q, lambda x: c * math.log(x))


def beta_minus_delta_exact(q: int) -> Fraction:
    """``beta_q - delta_q = int (1 + S)^{-(q+1)}`` exactly."""
    if q == 0:
        return Fraction(1)
    c = Fraction((-1) ** q, math.factorial(q))
    return cube_difference(q, lambda x: c / x)


def combination_target(q: int) -> Fraction:
    return Fraction(math.factorial(q), math.factorial(2 * q))


def constant_combination_check(q: int, tol: float = 1e-8) -> dict:
    """Assemble ``beta_q - delta_q + 2q q!/(2q+1)!`` and compare with ``q!/(2q)!``.

    The three weights are reported separately: one term with weight
    ``beta_q``, ``2q`` terms with weight ``-delta_q/(2q)`` each and ``2q``
    terms with weight ``q!/(2q+1)!`` each.
    """
    if q not in (1, 2, 3):
        raise ValueError("q must be 1, 2 or 3")
    b, d = beta_q(q), delta_q(q)
    z = Fraction(math.factorial(q), math.factorial(2 * q + 1))
    combination = b - d + float(2 * q * z)
    target = combination_target(q)
    err = abs(combination - float(target))
    return {
        "q": q,
        "beta": b,
        "delta": d,
        "weight_T": b,
        "weight_Tj_each": -d / (2 * q),
        "weight_Zj_each": float(z),
        "combination": combination,
        "target": float(target),
        "target_exact": str(target),
        "abs_err": err,
        "passed": err <= tol,
    }


def rescaling_consistency(df, R: SkewMat) -> dict:
    """Star product of the leading symbols of ``[t^2 D^2, f]`` and ``t D``.

    ``(2i <df, xi>) * (i xi_k)`` has quadratic part ``-2 <df, xi> xi_k`` plus a
    curvature remainder of degree zero.  The t-exponents add to zero.
    """
    n, N = R.n, R.N
    a = Symbol(n, N)
    for i, v in enumerate(df, start=1):
        if v:
            a = a + Symbol.xi(n, N, i, 2 * I * v)
    quadratic_ok = True
    remainders = {}
    for k in range(1, n + 1):
        prod = star(a, Symbol.xi(n, N, k, I), R)
        expected = Symbol(n, N)
        for i, v in enumerate(df, start=1):
            if v:
                alpha = [0] * n
                alpha[i - 1] += 1
                alpha[k - 1] += 1
                expected = expected + Symbol(n, N, {tuple(alpha): ExtElem.const(N, -2 * v)})
        quad = Symbol(n, N, {al: c for al, c in prod.terms.items() if sum(al) == 2})
        quadratic_ok = quadratic_ok and quad == expected
        rem = prod.terms.get((0,) * n)
        if rem is not None:
            remainders[k] = rem
    return {
        "quadratic_matches": quadratic_ok,
        "t_exponent_of_product": 0,
        "t_exponent_as_stated": 1,
        "remainders": remainders,
    }


def random_symbol(n: int, N: int, rng, degree: int = 2, span: int = 3, form_grades=(0, 2)) -> Symbol:
    """Random polynomial symbol with even exact form coefficients."""
    terms = {}
    for alpha in itertools.product(range(degree + 1), repeat=n):
        if sum(alpha) > degree:
            continue
        c = ExtElem(N)
        for g in form_grades:
            if g == 0:
                c = c + ExtElem.const(N, Fraction(rng.randint(-span, span)))
            elif g <= N:
                idx = sorted(rng.sample(range(1, N + 1), g))
                c = c + ExtElem.monomial(N, tuple(idx), Fraction(rng.randint(-span, span)))
        terms[alpha] = c
    return Symbol(n, N, terms)


def random_curv(n: int, N: int, rng, span: int = 3) -> SkewMat:
    """Random curvature pairing with 2-form entries."""
    upper = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            a, b = sorted(rng.sample(range(1, N + 1), 2))
            upper[(i, j)] = ExtElem.monomial(N, (a, b), Fraction(rng.randint(-span, span)))
    return curv_pairing(n, N, upper)


def star_checks(n: int = 2, N: int = 6, instances: int = 20, seed: int = 0) -> dict:
    """Associativity, the ``R = 0`` degeneration and linear commutators on random symbols.

    Each instance draws fresh degree-2 symbols and a curvature pairing; all
    comparisons are exact.
    """
    rng = random.Random(seed)
    zero = SkewMat.from_upper(n, N, {})
    assoc = degenerate = commutator = 0
    for _ in range(instances):
        R = random_curv(n, N, rng)
        a, b, c = (random_symbol(n, N, rng) for _ in range(3))
        assoc += star(star(a, b, R), c, R) == star(a, star(b, c, R), R)
        degenerate += star(a, b, zero) == pointwise(a, b)
        ok = True
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                xi, xj = Symbol.xi(n, N, i), Symbol.xi(n, N, j)
                comm = star(xi, xj, R) - star(xj, xi, R)
                expected = Symbol.const(n, N, R.entries[i - 1][j - 1] * Fraction(-1, 2))
                ok = ok and comm == expected
        commutator += ok
    return {
        "n": n,
        "instances": instances,
        "seed": seed,
        "associative": assoc,
        "degenerate_to_pointwise": degenerate,
        "commutator_is_minus_half_R": commutator,
        "passed": assoc == degenerate == commutator == instances,
    }


__all__ = [
    "Symbol",
    "pointwise",
    "curv_pairing",
    "star",
    "ModelHamiltonian",
    "model_hamiltonian",
    "gaussian_xi_moment",
    "gaussian_xi_integral",
    "trace_density",
    "beta_q",
    "delta_q",
    "beta_q_closed_form",
    "beta_minus_delta_exact",
    "combination_target",
    "constant_combination_check",
    "rescaling_consistency",
    "random_symbol",
    "random_curv",
    "star_checks",
]
