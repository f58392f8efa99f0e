"""Exact scalars and the exterior algebra over generators J_1..J_N.

Index sets are plain ``int`` bitmasks: generator ``J_i`` (1-based) lives in
bit ``i - 1``.  Iterating a mask with :func:`indices_of` yields ascending
indices, which is also the order used for every basis monomial.

Scalars are either exact or floating.  Exact real values are ``int`` or
``fractions.Fraction``; exact non-real values are :class:`GaussianRational`.
Floating values are ``float`` or ``complex``.  Arithmetic between an exact and
a floating value promotes to floating, which falls out of Python's numeric
tower for the real case and is implemented explicitly for the Gaussian case.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Complex, Rational

MAX_GENERATORS = 62


class DimensionError(ValueError):
    """Operands live in exterior algebras with different generator counts."""


class ParityError(ValueError):
    """An operation that needs an even (or homogeneous) element got something else."""


# ---------------------------------------------------------------------------
# scalars


class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts.

    Instances are only created for a non-zero imaginary part; use
    :func:`gaussian` to build a value, which collapses to ``Fraction`` when
    the imaginary part vanishes.
    """

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"

    def __hash__(self):
        return hash((self.re, self.im))

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, Rational):
            return False  # normalized values never have im == 0
        if isinstance(other, Complex):
            return complex(self) == other
        return NotImplemented

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return True

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __abs__(self):
        return abs(complex(self))

    def __add__(self, other):
        if isinstance(other, GaussianRational):
            return gaussian(self.re + other.re, self.im + other.im)
        if isinstance(other, Rational):
            return GaussianRational(self.re + other, self.im)
        if isinstance(other, Complex):
            return complex(self) + other
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GaussianRational):
            return gaussian(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        if isinstance(other, Rational):
            return gaussian(self.re * other, self.im * other)
        if isinstance(other, Complex):
            return complex(self) * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GaussianRational):
            norm = other.re * other.re + other.im * other.im
            return self * GaussianRational(other.re / norm, -other.im / norm)
        if isinstance(other, Rational):
            return gaussian(self.re / other, self.im / other)
        if isinstance(other, Complex):
            return complex(self) / other
        return NotImplemented

    def __rtruediv__(self, other):
        norm = self.re * self.re + self.im * self.im
        inverse = GaussianRational(self.re / norm, -self.im / norm)
        return inverse * other

    def __pow__(self, k):
        if not isinstance(k, int):
            return complex(self) ** k
        if k < 0:
            return 1 / (self ** (-k))
        result = Fraction(1)
        base = self
        while k:
            if k & 1:
                result = base * result
            base = base * base
            k >>= 1
        return result


def gaussian(re, im=0):
    """Exact scalar ``re + i*im``; a plain ``Fraction`` when ``im == 0``."""
    im = Fraction(im)
    if im == 0:
        return Fraction(re)
    return GaussianRational(re, im)


I = GaussianRational(0, 1)


def is_exact(x) -> bool:
    return isinstance(x, (Rational, GaussianRational))


def to_complex(x) -> complex:
    return complex(x)


def exact(x):
    """Coerce a Python number to an exact scalar (floats are converted exactly)."""
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, complex):
        return gaussian(Fraction(x.real), Fraction(x.imag))
    return Fraction(x)


def real_part(x):
    return x.re if isinstance(x, GaussianRational) else (x.real if isinstance(x, complex) else x)


def imag_part(x):
    if isinstance(x, GaussianRational):
        return x.im
    if isinstance(x, complex):
        return x.imag
    return Fraction(0) if isinstance(x, Rational) else 0.0


def i_power(k: int):
    """Exact ``i**k``."""
    return (Fraction(1), I, Fraction(-1), -I)[k % 4]


def scalar_to_json(x) -> dict:
    if is_exact(x):
        return {"re": str(real_part(x)), "im": str(imag_part(x))}
    return {"re": repr(float(real_part(x))), "im": repr(float(imag_part(x)))}


def scalar_from_json(doc: dict):
    re, im = str(doc.get("re", "0")), str(doc.get("im", "0"))
    if any(ch in re + im for ch in ".eEn"):
        return complex(float(re), float(im))
    return gaussian(Fraction(re), Fraction(im))


# ---------------------------------------------------------------------------
# index sets


def mask_of(indices) -> int:
    mask = 0
    for i in indices:
        if not 1 <= i <= MAX_GENERATORS:
            raise ValueError(f"generator index {i} out of range 1..{MAX_GENERATORS}")
        mask |= 1 << (i - 1)
    return mask


def indices_of(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length())
        mask ^= low
    return tuple(out)


def full_mask(n: int) -> int:
    return (1 << n) - 1


@lru_cache(maxsize=1 << 18)
def reorder_sign(a: int, b: int) -> int:
    """Sign of sorting the concatenation ``a`` then ``b`` (both ascending).

    Counts pairs ``i in a, j in b`` with ``i > j``.  Shared generators are
    allowed; callers decide what a repeat means (zero in the exterior algebra,
    a contraction in the Clifford algebra).
    """
    count = 0
    while b:
        low = b & -b
        count += (a & ~((low << 1) - 1)).bit_count()
        b ^= low
    return -1 if count & 1 else 1


def merge_sign(a: int, b: int) -> int:
    """``J^a J^b = merge_sign(a, b) J^(a|b)``, or 0 when ``a`` and ``b`` overlap."""
    if a & b:
        return 0
    return reorder_sign(a, b)


def eps(a: int, b: int, n: int) -> int:
    """Sign with ``J^a J^b = eps(a, b, n) J^{1..n}``.

    Zero unless ``a`` and ``b`` are disjoint and cover ``{1..n}``.
    """
    if a & b or (a | b) != full_mask(n):
        return 0
    return reorder_sign(a, b)


# ---------------------------------------------------------------------------
# exterior algebra


def _check_n(n):
    if not 0 <= n <= MAX_GENERATORS:
        raise ValueError(f"generator count must be in 0..{MAX_GENERATORS}, got {n}")


class ExtElem:
    """Element of the complex exterior algebra on ``n`` odd generators.

    ``terms`` maps a generator bitmask to its coefficient.  Zero coefficients
    are dropped on construction, so ``==`` is mathematical equality for exact
    coefficients.  ``a * b`` is the wedge product when both operands are
    ``ExtElem`` and scalar multiplication otherwise.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms=None):
        _check_n(n)
        self.n = n
        clean = {}
        if terms:
            limit = 1 << n
            for mask, c in terms.items():
                if mask >= limit or mask < 0:
                    raise DimensionError(f"mask {mask:#b} exceeds {n} generators")
                if c != 0:
                    clean[mask] = c
        self.terms = clean

    # construction helpers
    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def one(cls, n):
        return cls(n, {0: Fraction(1)})

    @classmethod
    def const(cls, n, c):
        return cls(n, {0: c})

    @classmethod
    def gen(cls, n, i):
        """The generator ``J_i`` (1-based)."""
        if not 1 <= i <= n:
            raise DimensionError(f"generator J_{i} not in 1..{n}")
        return cls(n, {1 << (i - 1): Fraction(1)})

    @classmethod
    def monomial(cls, n, indices, coeff=Fraction(1)):
        """``coeff * J_{i1} J_{i2} ...`` in the given (possibly unsorted) order."""
        out = cls.const(n, coeff)
        for i in indices:
            out = out * cls.gen(n, i)
        return out

    # inspection
    def __repr__(self):
        if not self.terms:
            return f"ExtElem({self.n}, 0)"
        parts = []
        for mask in sorted(self.terms, key=lambda m: (m.bit_count(), indices_of(m))):
            c = self.terms[mask]
            label = "J^" + "".join(map(str, indices_of(mask))) if mask else "1"
            parts.append(f"{c}*{label}")
        return f"ExtElem({self.n}, " + " + ".join(parts) + ")"

    def __eq__(self, other):
        if isinstance(other, ExtElem):
            return self.n == other.n and self.terms == other.terms
        if isinstance(other, (Complex, GaussianRational)):
            if other == 0:
                return not self.terms
            return self.terms == {0: other}
        return NotImplemented

    __hash__ = None

    def __bool__(self):
        return bool(self.terms)

    def coeff(self, indices_or_mask=0):
        mask = indices_or_mask if isinstance(indices_or_mask, int) else mask_of(indices_or_mask)
        return self.terms.get(mask, Fraction(0))

    def scalar_part(self):
        return self.terms.get(0, Fraction(0))

    def grades(self) -> set[int]:
        return {m.bit_count() for m in self.terms}

    def grade_part(self, k: int) -> "ExtElem":
        return ExtElem(self.n, {m: c for m, c in self.terms.items() if m.bit_count() == k})

    def even_part(self):
        return ExtElem(self.n, {m: c for m, c in self.terms.items() if not m.bit_count() & 1})

    def odd_part(self):
        return ExtElem(self.n, {m: c for m, c in self.terms.items() if m.bit_count() & 1})

    def is_even(self):
        return all(not m.bit_count() & 1 for m in self.terms)

    def is_odd(self):
        return all(m.bit_count() & 1 for m in self.terms)

    def parity(self):
        """0 or 1 for a homogeneous element (zero counts as even)."""
        if self.is_even():
            return 0
        if self.is_odd():
            return 1
        raise ParityError("element is not homogeneous")

    def is_exact(self):
        return all(is_exact(c) for c in self.terms.values())

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def map_coeffs(self, fn) -> "ExtElem":
        return ExtElem(self.n, {m: fn(c) for m, c in self.terms.items()})

    def to_float(self):
        return self.map_coeffs(complex)

    def embed(self, n: int, shift: int = 0) -> "ExtElem":
        """Same element inside a larger algebra, generators shifted by ``shift``."""
        if self.terms and max(self.terms).bit_length() + shift > n:
            raise DimensionError("embedding does not fit")
        return ExtElem(n, {m << shift: c for m, c in self.terms.items()})

    # arithmetic
    def _same(self, other):
        if other.n != self.n:
            raise DimensionError(f"generator counts differ: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, ExtElem):
            if isinstance(other, (Complex, GaussianRational)):
                other = ExtElem.const(self.n, other)
            else:
                return NotImplemented
        self._same(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return ExtElem(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return ExtElem(self.n, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, ExtElem):
            return wedge(self, other)
        if isinstance(other, (Complex, GaussianRational)):
            if other == 0:
                return ExtElem(self.n)
            return ExtElem(self.n, {m: c * other for m, c in self.terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (Complex, GaussianRational)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (Complex, GaussianRational)):
            return ExtElem(self.n, {m: c / other for m, c in self.terms.items()})
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not defined")
        out = ExtElem.one(self.n)
        for _ in range(k):
            out = out * self
        return out

    # serialization
    def to_json(self) -> dict:
        terms = []
        for mask in sorted(self.terms, key=lambda m: (m.bit_count(), indices_of(m))):
            entry = {"indices": list(indices_of(mask))}
            entry.update(scalar_to_json(self.terms[mask]))
            terms.append(entry)
        return {"n": self.n, "terms": terms}

    @classmethod
    def from_json(cls, doc: dict, n: int | None = None) -> "ExtElem":
        n = doc.get("n", n)
        if n is None:
            n = max((max(t["indices"], default=0) for t in doc["terms"]), default=0)
        out = cls(n)
        for t in doc["terms"]:
            out = out + cls.monomial(n, t["indices"], scalar_from_json(t))
        return out


def wedge(a: ExtElem, b: ExtElem) -> ExtElem:
    """Graded-commutative product; term signs come from :func:`reorder_sign`."""
    if a.n != b.n:
        raise DimensionError(f"generator counts differ: {a.n} vs {b.n}")
    out: dict[int, object] = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            if ma & mb:
                continue
            m = ma | mb
            c = ca * cb
            if reorder_sign(ma, mb) < 0:
                c = -c
            out[m] = out.get(m, 0) + c
    return ExtElem(a.n, out)


def exp_even(a: ExtElem) -> ExtElem:
    """Exponential of an even element.

    The degree-0 part is exponentiated as a scalar factor and the nilpotent
    remainder by its finite Taylor series.  With an exact degree-0 part other
    than zero the scalar factor ``e**c`` is irrational, so the result falls
    back to floating coefficients.
    """
    if not a.is_even():
        raise ParityError("exp_even needs an even element")
    c0 = a.scalar_part()
    nil = a - ExtElem.const(a.n, c0) if c0 != 0 else a
    out = ExtElem.one(a.n)
    term = ExtElem.one(a.n)
    k = 1
    while True:
        term = (term * nil) / k
        if not term.terms:
            break
        out = out + term
        k += 1
    if c0 != 0:
        out = out * exp_scalar(c0)
    return out


def exp_scalar(c):
    if isinstance(c, GaussianRational) or isinstance(c, complex):
        z = complex(c)
        return complex(math.exp(z.real) * math.cos(z.imag), math.exp(z.real) * math.sin(z.imag))
    return math.exp(float(c))


def berezin_top(a: ExtElem, n: int):
    """Coefficient of ``J^{1..n}``."""
    return a.terms.get(full_mask(n), Fraction(0))
