"""Supertrace identities in A (x) C_n checked by brute-force expansion, and a
Thom representative on a rank-n vector space with exact fiber integration.

Every identity has two evaluators.  The brute-force side expands the Clifford
exponential term by term; the closed-form side is assembled from Pfaffians and
``det^{1/2}(sinh w / w)``.  Exterior generators for the odd vector ``J`` are
appended after the generators used by the entries of ``omega``, so an
``omega`` built over ``N`` generators yields results over ``N + n``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .algebra_core import (
    DimensionError,
    ExtElem,
    full_mask,
    gaussian,
    is_exact,
    merge_sign,
    eps,
    i_power,
)
from .charclass import (
    EquivCurvatureData,
    SkewMat,
    det_half_sinh_ratio,
    equivariant_curvature,
    pf_sub,
)
from .clifford import CliffElem, c_map, cliff_exp, supertrace, supertrace_unit


# ---------------------------------------------------------------------------
# reports


@dataclass
class CheckReport:
    """Both sides of one identity instance and how far apart they are."""

    identity: str
    n: int
    lhs: ExtElem
    rhs: ExtElem
    tol: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return self.lhs.is_exact() and self.rhs.is_exact()

    @property
    def deviation(self) -> float:
        diff = self.lhs - self.rhs
        if self.exact:
            return 0.0 if not diff.terms else float(max(abs(complex(c)) for c in diff.terms.values()))
        return diff.max_abs()

    @property
    def passed(self) -> bool:
        if self.exact:
            return self.lhs == self.rhs
        return self.deviation <= self.tol

    def summary(self) -> dict:
        return {
            "identity": self.identity,
            "n": self.n,
            "exact": self.exact,
            "max_abs_deviation": self.deviation,
            "passed": self.passed,
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# building blocks


def _lift(omega: SkewMat, N: int) -> SkewMat:
    if omega.N == N:
        return omega
    return SkewMat([[x.embed(N) for x in row] for row in omega.entries])


def quadratic_gamma(omega: SkewMat, N: int | None = None) -> CliffElem:
    """``sum_{i<j} omega_ij g_i g_j`` (the element written 1/2 g^t omega g)."""
    N = omega.N if N is None else N
    n = omega.n
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            e = omega.entries[i][j]
            if e.terms:
                out[(1 << i) | (1 << j)] = e.embed(N)
    return CliffElem(n, N, out)


def linear_gamma(coeffs, n: int, N: int) -> CliffElem:
    """``sum_k a_k g_k`` for ``ExtElem`` or scalar ``a_k``."""
    out = {}
    for k, a in enumerate(coeffs):
        e = a if isinstance(a, ExtElem) else ExtElem.const(N, a)
        if e.terms:
            out[1 << k] = e
    return CliffElem(n, N, out)


def j_generators(omega: SkewMat) -> tuple[int, list[ExtElem]]:
    """Total generator count and the odd vector ``J`` placed after omega's generators."""
    N = omega.N + omega.n
    return N, [ExtElem.gen(N, omega.N + k) for k in range(1, omega.n + 1)]


def j_monomial(omega: SkewMat, mask: int, N: int) -> ExtElem:
    """``J^I`` for a 1-based index set ``I`` of the J generators."""
    return ExtElem(N, {mask << omega.N: Fraction(1)})


def _half_sign(size: int) -> int:
    """``(-1)^{(size+1)/2}`` for odd ``size``."""
    return -1 if ((size + 1) // 2) % 2 else 1


# ---------------------------------------------------------------------------
# identities


def str_exp_lhs(omega: SkewMat) -> ExtElem:
    return supertrace(cliff_exp(quadratic_gamma(omega)))


def str_exp_rhs(omega: SkewMat) -> ExtElem:
    from .charclass import pfaffian

    return det_half_sinh_ratio(omega) * pfaffian(omega) * supertrace_unit(omega.n)


def check_str_exp(omega: SkewMat, tol: float = 1e-12) -> CheckReport:
    """``Str exp(sum_{i<j} w_ij g_i g_j) = (2i)^{n/2} det^{1/2}(sinh w / w) Pf(w)``."""
    _require_even(omega.n)
    return CheckReport("str_exp", omega.n, str_exp_lhs(omega), str_exp_rhs(omega), tol)


def check_odd_vanish(z, omega: SkewMat, tol: float = 1e-12) -> CheckReport:
    """``Str(c(z) exp(sum_{i<j} w_ij g_i g_j)) = 0``."""
    _require_even(omega.n)
    if len(z) != omega.n:
        raise DimensionError("z must have length n")
    c = c_map(z, omega.N)
    lhs = supertrace(c * cliff_exp(quadratic_gamma(omega)))
    return CheckReport("odd_vanish", omega.n, lhs, ExtElem(omega.N), tol)


def grand_identity_lhs(omega: SkewMat, c) -> ExtElem:
    """``Str((sum c_k g_k) exp(sum_{i<j} w_ij g_i g_j + sum_k J_k g_k))``."""
    n = omega.n
    N, J = j_generators(omega)
    exponent = quadratic_gamma(omega, N) + linear_gamma(J, n, N)
    return supertrace(linear_gamma(c, n, N) * cliff_exp(exponent))


def grand_identity_rhs(omega: SkewMat, c) -> ExtElem:
    """Closed form with Pfaffian minors.

    ``(2i)^{n/2} det^{1/2}(sinh w/w) sum_{k,I,I'} (-1)^{(|I|+1)/2} c_k
    eps(I+{k}, I') s({k}, I) Pf(w_{I'}) J^I`` where ``eps`` is taken relative
    to the full index set and ``s({k}, I)`` is the sign of ``J^k J^I``
    relative to ``{k} + I``.
    """
    n = omega.n
    N = omega.N + n
    w = _lift(omega, N)
    total = ExtElem(N)
    full = full_mask(n)
    for k in range(1, n + 1):
        kb = 1 << (k - 1)
        ck = c[k - 1]
        if ck == 0:
            continue
        for I in range(1 << n):
            s_rel = merge_sign(kb, I)
            if s_rel == 0 or I.bit_count() % 2 == 0:
                continue
            Ip = full & ~(I | kb)
            s_full = eps(I | kb, Ip, n)
            coeff = ck * (s_full * s_rel * _half_sign(I.bit_count()))
            total = total + pf_sub(w, Ip) * j_monomial(omega, I, N) * coeff
    return total * det_half_sinh_ratio(w) * supertrace_unit(n)


def check_grand_identity(omega: SkewMat, c, tol: float = 1e-12, strict: bool = False) -> CheckReport:
    """Brute-force left side against the Pfaffian-minor right side.

    The identity is a power-series identity in the entries of ``omega``, so it
    is checked for nilpotent (non-invertible) matrices too.  ``strict=True``
    enforces invertibility of the numeric part instead.
    """
    _require_even(omega.n)
    if len(c) != omega.n:
        raise DimensionError("c must have length n")
    if strict and abs(np.linalg.det(omega.numeric_part())) < 1e-12:
        raise ValueError("numeric part of omega is singular")
    report = CheckReport(
        "grand_identity", omega.n, grand_identity_lhs(omega, c), grand_identity_rhs(omega, c), tol
    )
    report.notes.append(
        "second sign factor read as the relative sign of J^k J^I (the full-set reading fails for n >= 4)"
    )
    return report


def pf_expansion_lhs(omega: SkewMat, c) -> ExtElem:
    """``(sum_k c_k w(J)_k) exp(1/2 J^t w J)`` with ``w(J)_k = sum_l w_kl J_l``."""
    n = omega.n
    N, J = j_generators(omega)
    w = _lift(omega, N)
    lin = ExtElem(N)
    for k in range(n):
        if c[k] == 0:
            continue
        for l in range(n):
            if w.entries[k][l].terms:
                lin = lin + w.entries[k][l] * J[l] * c[k]
    quad = ExtElem(N)
    for i in range(n):
        for j in range(i + 1, n):
            if w.entries[i][j].terms:
                quad = quad + w.entries[i][j] * J[i] * J[j]
    from .algebra_core import exp_even

    return lin * exp_even(quad)


def pf_expansion_rhs(omega: SkewMat, c) -> ExtElem:
    """``sum_{k,I} c_k s({k}, I) Pf(w_{I+{k}}) J^I`` with the relative sign ``s``."""
    n = omega.n
    N = omega.N + n
    w = _lift(omega, N)
    total = ExtElem(N)
    for k in range(1, n + 1):
        kb = 1 << (k - 1)
        if c[k - 1] == 0:
            continue
        for I in range(1 << n):
            s = merge_sign(kb, I)
            if s == 0:
                continue
            pf = pf_sub(w, I | kb)
            if pf.terms:
                total = total + pf * j_monomial(omega, I, N) * (c[k - 1] * s)
    return total


def check_pf_expansion(omega: SkewMat, c, tol: float = 1e-12) -> CheckReport:
    if len(c) != omega.n:
        raise DimensionError("c must have length n")
    report = CheckReport(
        "pf_expansion", omega.n, pf_expansion_lhs(omega, c), pf_expansion_rhs(omega, c), tol
    )
    report.notes.append("sign of J^k J^I taken relative to {k} + I")
    return report


def mq_exponential_rhs(omega: SkewMat, J_scale=Fraction(1)) -> ExtElem:
    """Closed form of ``Str exp(sum_{i<j} w_ij g_i g_j + s sum_k J_k g_k)``.

    ``(2i)^{n/2} det^{1/2}(sinh w/w) sum_{I even} eps(I, I') (-1)^{|I'|/2}
    Pf(w_I) (s J)^{I'}``.
    """
    n = omega.n
    N = omega.N + n
    w = _lift(omega, N)
    full = full_mask(n)
    total = ExtElem(N)
    for I in range(1 << n):
        if I.bit_count() % 2:
            continue
        Ip = full & ~I
        sign = eps(I, Ip, n) * (-1 if (Ip.bit_count() // 2) % 2 else 1)
        scale = J_scale ** Ip.bit_count()
        total = total + pf_sub(w, I) * j_monomial(omega, Ip, N) * (sign * scale)
    return total * det_half_sinh_ratio(w) * supertrace_unit(n)


def mq_exponential_lhs(omega: SkewMat, J_scale=Fraction(1)) -> ExtElem:
    n = omega.n
    N, J = j_generators(omega)
    exponent = quadratic_gamma(omega, N) + linear_gamma([j * J_scale for j in J], n, N)
    return supertrace(cliff_exp(exponent))


def _require_even(n):
    if n % 2:
        raise ValueError("n must be even")


# ---------------------------------------------------------------------------
# random and exhaustive instances


def random_nilpotent_skew(n: int, M: int, rng: random.Random, terms: int = 2, span: int = 3) -> SkewMat:
    """Skew matrix whose entries are random integer combinations of 2-forms in ``M`` generators."""
    upper = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            e = ExtElem(M)
            for _ in range(terms):
                a, b = sorted(rng.sample(range(1, M + 1), 2))
                e = e + ExtElem.monomial(M, (a, b), Fraction(rng.randint(-span, span)))
            upper[(i, j)] = e
    return SkewMat.from_upper(n, M, upper)


def n2_grid(span: int = 2, M: int = 4):
    """Every ``w_12 = a K1K2 + b K3K4`` with integer ``a, b`` in ``[-span, span]``."""
    e1 = ExtElem.monomial(M, (1, 2))
    e2 = ExtElem.monomial(M, (3, 4))
    for a in range(-span, span + 1):
        for b in range(-span, span + 1):
            yield SkewMat.from_upper(2, M, {(1, 2): e1 * a + e2 * b})


# ---------------------------------------------------------------------------
# fiber forms and Thom representatives


@dataclass(frozen=True)
class GaussianProfile:
    """The Gaussian representative (cutoff replaced by ``exp(-|x|^2)``)."""

    name: str = "gaussian"


@dataclass(frozen=True)
class BumpProfile:
    """Smooth cutoff ``f(s)``, ``s = |x|^2``: 1 for ``|x| <= r_in``, 0 for ``|x| >= r_out``."""

    r_in: float = 1.0
    r_out: float = 2.0
    name: str = "bump"

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise ValueError("need 0 < r_in < r_out")

    def _u(self, s):
        return (self.r_out**2 - s) / (self.r_out**2 - self.r_in**2)

    def value(self, s):
        return _smooth_step(self._u(s))

    def derivative(self, s):
        """``f'(s)``."""
        return -_smooth_step_prime(self._u(s)) / (self.r_out**2 - self.r_in**2)

    @property
    def support(self):
        return self.r_in, self.r_out


def _psi(u):
    return math.exp(-1.0 / u) if u > 0 else 0.0


def _smooth_step(u):
    if u <= 0:
        return 0.0
    if u >= 1:
        return 1.0
    a, b = _psi(u), _psi(1 - u)
    return a / (a + b)


def _smooth_step_prime(u):
    if u <= 0 or u >= 1:
        return 0.0
    a, b = _psi(u), _psi(1 - u)
    da, db = a / u**2, b / (1 - u) ** 2
    return (da * (a + b) - a * (da - db)) / (a + b) ** 2


@dataclass(frozen=True)
class Radial:
    """Radial factor ``f^{(order)}(s) * s^{-power}`` with ``s = |x|^2``."""

    profile: BumpProfile
    order: int = 1
    power: Fraction = Fraction(0)

    def __call__(self, s):
        base = self.profile.value(s) if self.order == 0 else self.profile.derivative(s)
        return base * s ** (-float(self.power)) if self.power else base


class FiberForm:
    """Polynomial fiber form with base-form coefficients.

    ``terms`` maps ``(alpha, dx_mask, radial)`` to an :class:`ExtElem` on the
    base, meaning ``coeff ^ x^alpha * radial(|x|^2) dx^{dx_mask}``.  With
    ``gaussian=True`` every term also carries the normalized weight
    ``pi^{-n/2} exp(-|x|^2)``.
    """

    __slots__ = ("n", "N", "terms", "gaussian")

    def __init__(self, n: int, N: int, terms=None, gaussian: bool = False):
        self.n, self.N, self.gaussian = n, N, gaussian
        clean = {}
        for key, coeff in (terms or {}).items():
            alpha, dxmask, radial = key
            if len(alpha) != n or dxmask >> n:
                raise DimensionError("term does not fit the fiber dimension")
            if gaussian and radial is not None:
                raise ValueError("Gaussian forms carry no extra radial factor")
            if coeff.terms:
                clean[(tuple(alpha), dxmask, radial)] = coeff
        self.terms = clean

    def __repr__(self):
        return f"FiberForm(n={self.n}, terms={len(self.terms)}, gaussian={self.gaussian})"

    def __add__(self, other):
        if (self.n, self.N, self.gaussian) != (other.n, other.N, other.gaussian):
            raise DimensionError("fiber forms are not compatible")
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return FiberForm(self.n, self.N, out, self.gaussian)

    def component(self, dxmask: int) -> "FiberForm":
        return FiberForm(
            self.n, self.N, {k: c for k, c in self.terms.items() if k[1] == dxmask}, self.gaussian
        )

    def top(self) -> "FiberForm":
        return self.component(full_mask(self.n))

    def evaluate(self, x, dxmask: int) -> ExtElem:
        """Coefficient of ``dx^{dxmask}`` at the point ``x``, weight included."""
        x = np.asarray(x, dtype=float)
        s = float(x @ x)
        out = ExtElem(self.N)
        for (alpha, m, radial), coeff in self.terms.items():
            if m != dxmask:
                continue
            val = float(np.prod(x ** np.array(alpha)))
            if radial is not None:
                val *= radial(s)
            out = out + coeff * val
        if self.gaussian:
            out = out * (math.exp(-s) / math.pi ** (self.n / 2))
        return out


def fiber_d(u: FiberForm) -> FiberForm:
    """Exterior derivative in the fiber directions of a Gaussian polynomial form.

    Base coefficients are treated as closed.  ``d`` passes the base
    coefficient with the Koszul sign of its degree.
    """
    if not u.gaussian:
        raise ValueError("fiber_d is implemented for Gaussian polynomial forms")
    out = {}
    n = u.n
    for (alpha, m, _), coeff in u.terms.items():
        for parity in (0, 1):
            part = coeff.even_part() if parity == 0 else coeff.odd_part()
            if not part.terms:
                continue
            if parity:
                part = -part
            for i in range(n):
                ib = 1 << i
                s = merge_sign(ib, m)
                if s == 0:
                    continue
                # d(x^alpha e^{-|x|^2}) = sum_i (alpha_i x^{alpha - e_i} - 2 x^{alpha + e_i}) e^{-|x|^2} dx_i
                if alpha[i] > 0:
                    a2 = list(alpha)
                    a2[i] -= 1
                    key = (tuple(a2), m | ib, None)
                    out[key] = out.get(key, ExtElem(u.N)) + part * (alpha[i] * s)
                a3 = list(alpha)
                a3[i] += 1
                key = (tuple(a3), m | ib, None)
                out[key] = out.get(key, ExtElem(u.N)) + part * (-2 * s)
    return FiberForm(n, u.N, out, gaussian=True)


@lru_cache(maxsize=None)
def _double_factorial_half(a: int) -> Fraction:
    """``pi^{-1/2} int x^{2a} e^{-x^2} dx = (2a-1)!! / 2^a``."""
    out = Fraction(1)
    for j in range(1, a + 1):
        out *= Fraction(2 * j - 1, 2)
    return out


def gaussian_moment(alpha) -> Fraction:
    """``pi^{-n/2} int x^alpha e^{-|x|^2} dx`` exactly (zero for any odd exponent)."""
    out = Fraction(1)
    for a in alpha:
        if a % 2:
            return Fraction(0)
        out *= _double_factorial_half(a // 2)
    return out


def sphere_moment(alpha) -> float:
    """``int_{S^{n-1}} x^alpha d sigma``."""
    if any(a % 2 for a in alpha):
        return 0.0
    n = len(alpha)
    logs = sum(math.lgamma((a + 1) / 2) for a in alpha) - math.lgamma((sum(alpha) + n) / 2)
    return 2.0 * math.exp(logs)


def fiber_integral(u: FiberForm, tol: float = 1e-12) -> ExtElem:
    """Integrate the ``dx_1 ... dx_n`` component over the fiber.

    Gaussian forms integrate by exact moments.  Compactly supported radial
    factors integrate in polar coordinates: exact sphere moments times an
    adaptive radial quadrature over the support of the profile derivative.
    """
    top = full_mask(u.n)
    out = ExtElem(u.N)
    for (alpha, m, radial), coeff in u.terms.items():
        if m != top:
            continue
        if u.gaussian:
            out = out + coeff * gaussian_moment(alpha)
            continue
        if radial is None or radial.order == 0:
            raise ValueError("top component without compact support cannot be integrated")
        ang = sphere_moment(alpha)
        if ang == 0.0:
            continue
        deg = sum(alpha) + u.n - 1
        r0, r1 = radial.profile.support
        val, _ = integrate.quad(
            lambda r: r**deg * radial(r * r), r0, r1, epsabs=tol, epsrel=tol, limit=200
        )
        out = out + coeff * (ang * val)
    return out


def _resolve_curvature(curvature, X):
    if isinstance(curvature, EquivCurvatureData):
        return equivariant_curvature(curvature, X)
    if X not in (None, 0):
        raise ValueError("a plain curvature matrix only supports X = 0")
    return curvature


def thom_form(curvature, X=0, profile=None) -> FiberForm:
    """Thom representative of the rank-n bundle with equivariant curvature ``Omega(X)``.

    Gaussian profile: ``pi^{-n/2} e^{-|x|^2} sum_{I even} eps(I, I') Pf(-Omega_I / 2) dx^{I'}``.

    Bump profile ``f``: ``f(|x|^2) Pf(-Omega/(2 pi)) + d f(|x|^2) ^ Gamma`` where
    ``Gamma`` is the transgression integral of the spinor superconnection,
    evaluated term by term with ``int_0^inf t^m e^{-t^2 s} dt =
    Gamma((m+1)/2) / (2 s^{(m+1)/2})``.
    """
    profile = profile or GaussianProfile()
    Omega = _resolve_curvature(curvature, X)
    n, N = Omega.n, Omega.N
    _require_even(n)
    zero = (0,) * n
    full = full_mask(n)
    half = Omega / 2
    if isinstance(profile, GaussianProfile):
        terms = {}
        for I in range(1 << n):
            if I.bit_count() % 2:
                continue
            Ip = full & ~I
            pf = pf_sub(half, I)
            if (I.bit_count() // 2) % 2:
                pf = -pf
            terms[(zero, Ip, None)] = pf * eps(I, Ip, n)
        return FiberForm(n, N, terms, gaussian=True)

    terms = {}
    pf0 = pf_sub(Omega * (-1 / (2 * math.pi)), full)
    terms[(zero, 0, Radial(profile, 0))] = pf0 if n else ExtElem.one(N)
    sign_pi = (-1) ** (n // 2) / math.pi ** (n // 2)
    for k in range(1, n + 1):
        kb = 1 << (k - 1)
        for I in range(1 << n):
            s_rel = merge_sign(kb, I)
            if s_rel == 0 or I.bit_count() % 2 == 0:
                continue
            Ip = full & ~(I | kb)
            size = I.bit_count()
            coeff = pf_sub(half, Ip) * (
                eps(I | kb, Ip, n) * s_rel * _half_sign(size) * (-1) ** size * sign_pi
            )
            if not coeff.terms:
                continue
            # 2 f'(s) x_i dx_i  ^  x_k G(s) dx^I, with 2 * Gamma((|I|+1)/2) / 2
            gamma_factor = math.factorial((size - 1) // 2)
            radial = Radial(profile, 1, Fraction(size + 1, 2))
            for i in range(1, n + 1):
                ib = 1 << (i - 1)
                s_i = merge_sign(ib, I)
                if s_i == 0:
                    continue
                alpha = [0] * n
                alpha[i - 1] += 1
                alpha[k - 1] += 1
                # dchi is a 1-form; moving it past the even base coefficient costs nothing
                key = (tuple(alpha), I | ib, radial)
                val = coeff * (s_i * gamma_factor)
                terms[key] = terms[key] + val if key in terms else val
    return FiberForm(n, N, terms, gaussian=False)


def spinor_chern_character(n: int) -> ExtElem:
    """Brute-force ``Str exp(-sum_k dx_k g_k)`` at the origin of a flat rank-n fiber.

    The full character is this times ``exp(-|x|^2)``; the ``dx`` generators
    are the exterior generators 1..n.
    """
    _require_even(n)
    dx = [ExtElem.gen(n, k) for k in range(1, n + 1)]
    return supertrace(cliff_exp(linear_gamma([-d for d in dx], n, n)))


def riemann_roch_flat_check(n: int) -> dict:
    """Fiber integral of the spinor Chern character against ``(-2 pi i)^{n/2}``.

    Everything is carried in units of ``pi^{n/2}`` (the Gaussian integral), so
    the comparison is between exact Gaussian rationals.
    """
    ch = spinor_chern_character(n)
    coefficient = ch.terms.get(full_mask(n), Fraction(0))
    target = i_power(3 * (n // 2)) * 2 ** (n // 2)  # (-2i)^{n/2}
    U = thom_form(SkewMat.from_upper(n, 0, {}) if n else None)
    u_integral = fiber_integral(U).scalar_part()
    ratio = coefficient / u_integral if u_integral != 0 else None
    value = complex(coefficient) * math.pi ** (n / 2)
    return {
        "n": n,
        "coefficient_over_pi_power": coefficient,
        "target_over_pi_power": target,
        "value": value,
        "target": complex(target) * math.pi ** (n / 2),
        "thom_integral": u_integral,
        "ratio_to_thom_integral": ratio,
        "exact": is_exact(coefficient),
        "passed": coefficient == target and u_integral == 1,
    }


def random_numeric_curvature(n: int, rng: np.random.Generator, radius: float | None = None) -> SkewMat:
    """Random real skew matrix with spectral radius strictly below pi."""
    a = rng.normal(size=(n, n))
    a = a - a.T
    rho = np.max(np.abs(np.linalg.eigvals(a)))
    target = radius if radius is not None else rng.uniform(0.1, 0.95) * math.pi
    return SkewMat.from_array(a * (target / rho) if rho > 0 else a)


THOM_PROFILES = {
    "gaussian": GaussianProfile(),
    "bump": BumpProfile(1.0, 2.0),
    "wide-bump": BumpProfile(0.5, 3.0),
}


def thom_batch(n: int, instances: int = 10, seed: int = 0, profiles=("gaussian", "bump", "wide-bump"),
               tol: float = 1e-9) -> dict:
    """Fiber integrals of the Thom representative for ``Omega = 0`` and random ``Omega``.

    Random curvatures are real skew matrices with spectral radius below pi.
    Gaussian integrals must equal 1 exactly; compact profiles within ``tol``.
    """
    _require_even(n)
    rng = np.random.default_rng(seed)
    curvatures = [SkewMat.from_upper(n, 0, {})] + [random_numeric_curvature(n, rng) for _ in range(instances)]
    per_profile = {}
    passed = True
    for name in profiles:
        profile = THOM_PROFILES[name]
        values = [fiber_integral(thom_form(Om, profile=profile)).scalar_part() for Om in curvatures]
        exact = all(is_exact(v) for v in values)
        worst = max(abs(complex(v) - 1) for v in values)
        ok = all(v == 1 for v in values) if isinstance(profile, GaussianProfile) else worst < tol
        passed = passed and ok
        per_profile[name] = {"max_abs_deviation": worst, "exact": exact, "passed": ok}
    closed = all(not c.terms for c in fiber_d(thom_form(curvatures[0])).terms.values())
    return {
        "n": n,
        "instances": len(curvatures),
        "seed": seed,
        "spectral_radii": [float(Om.spectral_radius()) for Om in curvatures],
        "profiles": per_profile,
        "closed_at_zero_curvature": closed,
        "passed": passed and closed,
    }


# ---------------------------------------------------------------------------
# batches


IDENTITY_ANCHORS = {
    "str_exp": "clifford-supertrace-exponential",
    "odd_vanish": "clifford-odd-supertrace-vanishing",
    "grand_identity": "supertrace-linear-times-exponential",
    "pf_expansion": "pfaffian-minor-expansion",
}


def _random_vector(n, rng: random.Random, span=3, complex_=False):
    if complex_:
        return [gaussian(rng.randint(-span, span), rng.randint(-span, span)) for _ in range(n)]
    return [Fraction(rng.randint(-span, span)) for _ in range(n)]


def batch_instances(n: int, instances: int, seed: int, M: int | None = None):
    """The n=2 exhaustive grid (when ``n == 2``) followed by ``instances`` seeded random matrices."""
    _require_even(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    M = M if M is not None else (4 if n == 2 else 6)
    rng = random.Random(seed)
    if n == 2:
        yield from n2_grid(M=M)
    for _ in range(instances):
        yield random_nilpotent_skew(n, M, rng)


def verify_batch(identity: str, n: int, instances: int = 50, seed: int = 0, M: int | None = None) -> dict:
    """Run one identity over a batch of exact instances and reduce to a single summary.

    Instances run one after another; each is independent, so the reduction is
    the same in any order.
    """
    if identity not in IDENTITY_ANCHORS:
        raise ValueError(f"unknown identity {identity!r}; choose from {sorted(IDENTITY_ANCHORS)}")
    rng = random.Random(seed + 1)
    count, worst, exact, failures, notes = 0, 0.0, True, [], set()
    for omega in batch_instances(n, instances, seed, M):
        if identity == "str_exp":
            rep = check_str_exp(omega)
        elif identity == "odd_vanish":
            rep = check_odd_vanish(_random_vector(n, rng, complex_=True), omega)
        elif identity == "grand_identity":
            rep = check_grand_identity(omega, _random_vector(n, rng))
        else:
            rep = check_pf_expansion(omega, _random_vector(n, rng))
        count += 1
        worst = max(worst, rep.deviation)
        exact = exact and rep.exact
        notes.update(rep.notes)
        if not rep.passed:
            failures.append(count - 1)
    return {
        "identity": identity,
        "anchor": IDENTITY_ANCHORS[identity],
        "n": n,
        "instances": count,
        "seed": seed,
        "max_abs_deviation": worst,
        "exact": exact,
        "passed": not failures,
        "failures": failures,
        "notes": sorted(notes),
    }


__all__ = [
    "CheckReport",
    "check_str_exp",
    "check_odd_vanish",
    "check_grand_identity",
    "check_pf_expansion",
    "grand_identity_lhs",
    "grand_identity_rhs",
    "pf_expansion_lhs",
    "pf_expansion_rhs",
    "mq_exponential_lhs",
    "mq_exponential_rhs",
    "quadratic_gamma",
    "random_nilpotent_skew",
    "n2_grid",
    "GaussianProfile",
    "BumpProfile",
    "FiberForm",
    "fiber_d",
    "fiber_integral",
    "gaussian_moment",
    "thom_form",
    "spinor_chern_character",
    "riemann_roch_flat_check",
    "random_numeric_curvature",
    "IDENTITY_ANCHORS",
    "THOM_PROFILES",
    "thom_batch",
    "batch_instances",
    "verify_batch",
]

