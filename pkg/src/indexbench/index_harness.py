"""Heat-kernel index classes of small model Dirac operators.

The Wassermann idempotent is built by dense functional calculus from the
singular value decomposition of ``D+``.  Two model operators with known
index are provided: a spectrally truncated first-order operator on the
circle, and the Dirac operator of a flat torus carrying ``k`` flux quanta,
written in the Landau-level basis.  Cochains are paired with the index
class either by an explicit sum over lattice site tuples or, for
antisymmetrized products of functions, through multiplication operators.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse

from .charclass import flat_torus, integrate_density


class GrowthError(ValueError):
    """Cochain growth is not dominated by the kernel decay."""


# ---------------------------------------------------------------------------
# graded matrices


@dataclass
class GradedMatrix:
    """Operator on ``H+ (+) H-`` stored as four blocks."""

    pp: np.ndarray
    pm: np.ndarray
    mp: np.ndarray
    mm: np.ndarray

    def __post_init__(self):
        dp, dm = self.pp.shape[0], self.mm.shape[0]
        if self.pp.shape != (dp, dp) or self.mm.shape != (dm, dm):
            raise ValueError("diagonal blocks must be square")
        if self.pm.shape != (dp, dm) or self.mp.shape != (dm, dp):
            raise ValueError("off-diagonal block shapes do not match")

    @classmethod
    def dirac(cls, d_plus: np.ndarray) -> "GradedMatrix":
        """``[[0, D-], [D+, 0]]`` with ``D- = (D+)*``; ``D+`` has shape ``(d-, d+)``."""
        d_plus = np.asarray(d_plus, dtype=complex)
        dm, dp = d_plus.shape
        return cls(
            np.zeros((dp, dp), complex), d_plus.conj().T.copy(), d_plus, np.zeros((dm, dm), complex)
        )

    @classmethod
    def from_full(cls, m: np.ndarray, d_plus: int) -> "GradedMatrix":
        m = np.asarray(m)
        return cls(m[:d_plus, :d_plus], m[:d_plus, d_plus:], m[d_plus:, :d_plus], m[d_plus:, d_plus:])

    @classmethod
    def block_diagonal(cls, a: np.ndarray, b: np.ndarray) -> "GradedMatrix":
        return cls(a, np.zeros((a.shape[0], b.shape[0]), a.dtype), np.zeros((b.shape[0], a.shape[0]), a.dtype), b)

    @property
    def dims(self) -> tuple[int, int]:
        return self.pp.shape[0], self.mm.shape[0]

    @property
    def d_plus(self) -> np.ndarray:
        return self.mp

    def full(self) -> np.ndarray:
        return np.block([[self.pp, self.pm], [self.mp, self.mm]])

    def __matmul__(self, other: "GradedMatrix") -> "GradedMatrix":
        return GradedMatrix(
            self.pp @ other.pp + self.pm @ other.mp,
            self.pp @ other.pm + self.pm @ other.mm,
            self.mp @ other.pp + self.mm @ other.mp,
            self.mp @ other.pm + self.mm @ other.mm,
        )

    def __add__(self, other):
        return GradedMatrix(self.pp + other.pp, self.pm + other.pm, self.mp + other.mp, self.mm + other.mm)

    def __sub__(self, other):
        return GradedMatrix(self.pp - other.pp, self.pm - other.pm, self.mp - other.mp, self.mm - other.mm)

    def trace(self) -> complex:
        """Ordinary trace over ``H+ (+) H-``."""
        return complex(np.trace(self.pp) + np.trace(self.mm))

    def supertrace(self) -> complex:
        return complex(np.trace(self.pp) - np.trace(self.mm))

    def check_odd_selfadjoint(self, tol: float = 1e-12):
        scale = max(1.0, float(np.max(np.abs(self.mp), initial=0.0)))
        if np.max(np.abs(self.pp), initial=0.0) > tol * scale or np.max(np.abs(self.mm), initial=0.0) > tol * scale:
            raise ValueError("operator is not odd")
        if np.max(np.abs(self.pm - self.mp.conj().T), initial=0.0) > tol * scale:
            raise ValueError("operator is not self-adjoint")


def graded_unit(dims) -> GradedMatrix:
    """``diag(0, I)``."""
    dp, dm = dims
    return GradedMatrix.block_diagonal(np.zeros((dp, dp), complex), np.eye(dm, dtype=complex))


# ---------------------------------------------------------------------------
# functional calculus


@dataclass(frozen=True)
class SchwartzPair:
    """``f_t(x) = exp(-t^2 x^2)`` and ``g_t(x) = exp(-t^2 x^2 / 2) sqrt(1 - exp(-t^2 x^2))`` with the sign of ``x``.

    ``f^2 + g^2 = f`` is what makes the Wassermann projection idempotent.
    """

    t: float

    def f(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(self.t * x) ** 2)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        u = (self.t * x) ** 2
        # sqrt((1 - e^{-u}) / u), with its Taylor series where u is tiny
        small = u < 1e-8
        ratio = np.where(small, 1 - u / 2 + u * u / 6, -np.expm1(-u) / np.where(small, 1.0, u))
        return np.exp(-u / 2) * np.sqrt(ratio) * self.t * x


@dataclass
class Spectrum:
    """Singular value decomposition ``D+ = U diag(s) V*``."""

    U: np.ndarray
    s: np.ndarray
    Vh: np.ndarray
    dims: tuple


def spectral_decomposition(D: GradedMatrix) -> Spectrum:
    D.check_odd_selfadjoint()
    U, s, Vh = linalg.svd(D.mp, lapack_driver="gesvd")
    return Spectrum(U, s, Vh, D.dims)


def monomial_spectrum(d_plus: np.ndarray) -> Spectrum:
    """Singular value decomposition of a matrix with at most one nonzero per row and column.

    Read off directly: each nonzero ``c`` at ``(i, j)`` gives singular value
    ``|c|`` with left vector ``(c/|c|) e_i`` and right vector ``e_j``.
    Unmatched basis vectors fill out ``U`` and ``Vh`` in index order.
    """
    dm, dp = d_plus.shape
    rows, cols = np.nonzero(d_plus)
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise ValueError("matrix is not monomial")
    vals = d_plus[rows, cols]
    s = np.abs(vals)
    U = np.zeros((dm, dm), complex)
    Vh = np.zeros((dp, dp), complex)
    r = len(vals)
    U[rows, np.arange(r)] = vals / s
    Vh[np.arange(r), cols] = 1.0
    U[np.setdiff1d(np.arange(dm), rows), np.arange(r, dm)] = 1.0
    Vh[np.arange(r, dp), np.setdiff1d(np.arange(dp), cols)] = 1.0
    return Spectrum(U, s, Vh, (dp, dm))


def _padded(values, size, fill):
    out = np.full(size, fill, dtype=float)
    out[: len(values)] = values
    return out


def wassermann_class(D: GradedMatrix, t: float, spectrum: Spectrum | None = None) -> GradedMatrix:
    """``Ind_t(D)``: the Wassermann idempotent minus ``diag(0, I)``.

    Blocks: ``exp(-t^2 D-D+)``, ``g_t``-type off-diagonal entries, and
    ``-exp(-t^2 D+D-)`` in the lower right.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    sp = spectrum or spectral_decomposition(D)
    dp, dm = sp.dims
    pair = SchwartzPair(t)
    r = len(sp.s)
    V = sp.Vh.conj().T
    fp = _padded(pair.f(sp.s), dp, 1.0)
    fm = _padded(pair.f(sp.s), dm, 1.0)
    h = pair.g(sp.s)
    pp = (V * fp) @ sp.Vh
    mm = -(sp.U * fm) @ sp.U.conj().T
    mp = (sp.U[:, :r] * h) @ sp.Vh[:r, :]
    return GradedMatrix(pp, mp.conj().T, mp, mm)


def projection_from_class(ind: GradedMatrix) -> GradedMatrix:
    return ind + graded_unit(ind.dims)


def idempotency_residual(ind: GradedMatrix) -> float:
    """Operator norm of ``p^2 - p`` for ``p = Ind_t + diag(0, I)``."""
    p = projection_from_class(ind).full()
    return float(np.linalg.norm(p @ p - p, 2))


def selfadjoint_residual(ind: GradedMatrix) -> float:
    p = projection_from_class(ind).full()
    return float(np.linalg.norm(p - p.conj().T, 2))


def str_index(D: GradedMatrix, t: float, spectrum: Spectrum | None = None) -> float:
    """``tr exp(-t^2 D-D+) - tr exp(-t^2 D+D-)``, read off as the trace of ``Ind_t(D)``."""
    return wassermann_class(D, t, spectrum).trace().real


def mckean_singer(D: GradedMatrix, t: float) -> float:
    """Independent route: eigenvalues of ``D-D+`` and ``D+D-``."""
    lam_p = np.linalg.eigvalsh(D.pm @ D.mp)
    lam_m = np.linalg.eigvalsh(D.mp @ D.pm)
    return float(np.sum(np.exp(-(t**2) * lam_p)) - np.sum(np.exp(-(t**2) * lam_m)))


def kernel_dimensions(D: GradedMatrix, tol: float = 1e-9) -> tuple[int, int]:
    s = np.linalg.svd(D.mp, compute_uv=False)
    rank = int(np.sum(s > tol))
    dp, dm = D.dims
    return dp - rank, dm - rank


# ---------------------------------------------------------------------------
# geometry and models


@dataclass
class LatticeGeometry:
    """Sample sites of a flat periodic space with weights and a synthesis map.

    ``synthesis`` (optional) has rows indexed by (site, fiber slot) and
    columns by basis vectors of ``H+ (+) H-``; it turns an operator matrix into
    its integral kernel at the sites.
    """

    positions: np.ndarray
    weights: np.ndarray
    periods: tuple
    fiber: int = 1
    synthesis: np.ndarray | None = None

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if self.positions.shape[0] == 1 and len(self.periods) == 1:
            self.positions = self.positions.T
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    @property
    def n_sites(self) -> int:
        return self.positions.shape[0]

    def distances_from(self, i: int) -> np.ndarray:
        delta = np.abs(self.positions - self.positions[i])
        periods = np.asarray(self.periods, dtype=float)
        delta = np.minimum(delta % periods, periods - delta % periods)
        return np.sqrt(np.sum(delta**2, axis=1))

    def distance_matrix(self) -> np.ndarray:
        return np.array([self.distances_from(i) for i in range(self.n_sites)])

    def kernel(self, A: GradedMatrix) -> np.ndarray:
        """``K[x, a, y, b]`` with ``(A u)(x) = sum_y K(x, y) u(y) w_y``."""
        if self.synthesis is None:
            raise ValueError("this geometry carries no synthesis map")
        S = self.synthesis
        K = S @ A.full() @ S.conj().T
        n, F = self.n_sites, self.fiber
        return K.reshape(n, F, n, F)


@dataclass
class DiracModel:
    name: str
    D: GradedMatrix
    geometry: LatticeGeometry
    index: int
    multiplier: object = field(repr=False)
    meta: dict = field(default_factory=dict)
    _spectrum: Spectrum | None = field(default=None, repr=False)

    @property
    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = spectral_decomposition(self.D)
        return self._spectrum

    def ind(self, t: float) -> GradedMatrix:
        return wassermann_class(self.D, t, self.spectrum)

    def str_index(self, t: float) -> float:
        return str_index(self.D, t, self.spectrum)

    def lambda_max(self) -> float:
        return float(self.spectrum.s.max() ** 2) if len(self.spectrum.s) else 0.0


def _fourier_coefficients(values: np.ndarray, rel_tol: float = 1e-13) -> dict:
    """Nonzero discrete Fourier coefficients of sampled values, keyed by signed frequency."""
    c = np.fft.fftn(values) / values.size
    shape = values.shape
    out = {}
    cut = rel_tol * max(np.max(np.abs(c)), 1e-300)
    for idx in zip(*np.nonzero(np.abs(c) > cut)):
        freq = tuple(int(i) if i <= s // 2 else int(i) - s for i, s in zip(idx, shape))
        v = c[idx]
        # real and imaginary parts below the cut are rounding noise
        v = complex(v.real if abs(v.real) > cut else 0.0, v.imag if abs(v.imag) > cut else 0.0)
        out[freq] = v
    return out


# circle ---------------------------------------------------------------


def circle_dirac(N: int = 64, w: int = 1, length: float = 2 * math.pi) -> DiracModel:
    """First-order model on a circle of circumference ``length`` with index ``w``.

    Each of ``|w|`` components has ``H+`` modes ``-M..M`` and
    ``D+ e_k = k e_{k-1}``; the target drops the mode ``-1`` (the image of the
    kernel), so every component contributes one kernel vector.  ``w < 0``
    exchanges the roles of ``H+`` and ``H-``; ``w = 0`` uses the invertible
    ``D+ e_k = (k + 1/2) e_{k-1}`` on a single component.  Frequencies are
    ``2 pi k / length``.
    """
    if N < 8 * abs(w) + 8:
        raise ValueError(f"N = {N} sites cannot resolve winding {w}; need N >= {8 * abs(w) + 8}")
    M = N // 2 - 2
    comps = max(abs(w), 1)
    k_plus = list(range(-M, M + 1))
    if w == 0:
        src, dst = k_plus, [k - 1 for k in k_plus]
        entries = [(i, i, k + 0.5) for i, k in enumerate(k_plus)]
    else:
        src = k_plus
        dst = [k - 1 for k in k_plus if k != 0]
        pos = {m: j for j, m in enumerate(dst)}
        entries = [(pos[k - 1], i, float(k)) for i, k in enumerate(k_plus) if k != 0]
    block = np.zeros((len(dst), len(src)), complex)
    for r, c, v in entries:
        block[r, c] = v * (2 * math.pi / length)
    if w < 0:
        block = block.conj().T
        src, dst = dst, src
    Dp = linalg.block_diag(*([block] * comps))
    modes_plus = [(c, m) for c in range(comps) for m in src]
    modes_minus = [(c, m) for c in range(comps) for m in dst]

    theta = length * np.arange(N) / N
    F = 2 * comps
    basis = [(0, c, m) for c, m in modes_plus] + [(1, c, m) for c, m in modes_minus]
    S = np.zeros((N * F, len(basis)), complex)
    for col, (g, c, m) in enumerate(basis):
        slot = g * comps + c
        S[slot::F, col] = np.exp(2j * math.pi * m * theta / length) / math.sqrt(length)
    geom = LatticeGeometry(theta[:, None], np.full(N, length / N), (length,), F, S)

    def multiplier(values):
        coeffs = _fourier_coefficients(np.asarray(values, dtype=complex).reshape(N))

        def block_for(modes):
            out = np.zeros((len(modes), len(modes)), complex)
            for i, (ci, mi) in enumerate(modes):
                for j, (cj, mj) in enumerate(modes):
                    if ci == cj:
                        out[i, j] = coeffs.get((mi - mj,), 0.0)
            return out

        return GradedMatrix.block_diagonal(block_for(modes_plus), block_for(modes_minus))

    return DiracModel(
        "circle", GradedMatrix.dirac(Dp), geom, w, multiplier,
        {"N": N, "w": w, "modes": M, "components": comps, "length": length},
    )


# torus ----------------------------------------------------------------


def _annihilation(size: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, size, dtype=float)), 1).astype(complex)


def displacement(beta: complex, levels: int, margin: int | None = None) -> np.ndarray:
    """``<n| exp(beta a* - conj(beta) a) |m>`` for ``n, m < levels``.

    The generator is tridiagonal; after the phase change ``|n> -> (i e^{i arg beta})^n |n>``
    it becomes ``-i`` times a real symmetric tridiagonal matrix, which is
    exponentiated through its eigenvectors on ``levels + margin`` levels and
    cropped.  The default margin ``48 + 3 |beta| sqrt(levels)`` keeps the
    cropped block stable to about 1e-13.
    """
    if margin is None:
        margin = 48 + int(3 * abs(beta) * math.sqrt(levels))
    if beta == 0:
        return np.eye(levels, dtype=complex)
    size = levels + margin
    lam, V = linalg.eigh_tridiagonal(np.zeros(size), abs(beta) * np.sqrt(np.arange(1, size)))
    core = (V[:levels] * np.exp(-1j * lam)) @ V[:levels].T
    n = np.arange(levels)
    phase = np.exp(1j * n * np.angle(beta)) * 1j**n
    return phase[:, None] * core * phase.conj()[None, :]


def displacement_expm(beta: complex, levels: int, margin: int | None = None) -> np.ndarray:
    """Same matrix through a dense ``expm`` of the truncated generator (slow cross-check)."""
    if margin is None:
        margin = 48 + int(3 * abs(beta) * math.sqrt(levels))
    a = _annihilation(levels + margin)
    return linalg.expm(beta * a.conj().T - np.conj(beta) * a)[:levels, :levels]


def displacement_laguerre(beta: complex, levels: int) -> np.ndarray:
    """Closed form via generalized Laguerre polynomials (oracle for small ``levels``)."""
    from scipy.special import eval_genlaguerre, gammaln

    x = abs(beta) ** 2
    out = np.zeros((levels, levels), complex)
    for n in range(levels):
        for m in range(levels):
            if n >= m:
                pref = math.exp(0.5 * (gammaln(m + 1) - gammaln(n + 1)))
                out[n, m] = pref * beta ** (n - m) * math.exp(-x / 2) * eval_genlaguerre(m, n - m, x)
            else:
                pref = math.exp(0.5 * (gammaln(n + 1) - gammaln(m + 1)))
                out[n, m] = pref * (-np.conj(beta)) ** (m - n) * math.exp(-x / 2) * eval_genlaguerre(n, m - n, x)
    return out


def guiding_center(a: int, b: int, k: int) -> np.ndarray:
    """Magnetic translation ``exp(i q.R)`` on the ``|k|``-dimensional guiding-center space."""
    kk = abs(k)
    zeta = np.exp(1j * math.pi / kk)
    omega = zeta**2
    X = np.roll(np.eye(kk, dtype=complex), 1, axis=0)
    Z = np.diag(omega ** np.arange(kk))
    if k > 0:
        return zeta ** (-a * b) * np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, -b)
    return zeta ** (a * b) * np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)


def torus_dirac(N: int = 16, k: int = 1, levels: int | None = None) -> DiracModel:
    """Dirac operator on a flat torus with ``k`` flux quanta and unit magnetic length.

    The side is ``L = sqrt(2 pi |k|)``.  ``H+`` holds Landau levels
    ``0..n-1`` (each ``|k|``-fold degenerate), ``H-`` holds levels
    ``0..n-2`` and ``D+ = -i sqrt(2) a``; for ``k < 0`` the roles swap and
    ``D+ = i sqrt(2) a*``.  ``n = N^2 // |k|`` unless ``levels`` is given;
    ``N`` is then only the sampling grid for test functions.  For ``k = 0`` the basis is
    plane waves ``|m_i| <= N//2 - 1`` on a torus of side ``2 pi`` with
    ``D+ = p_x + i p_y``.
    """
    if k != 0 and N * N < 16 * abs(k):
        raise ValueError(f"N = {N} does not resolve {abs(k)} flux quanta; need N^2 >= {16 * abs(k)}")
    if k == 0:
        return _torus_plane_waves(N)
    kk = abs(k)
    n_lev = levels if levels is not None else N * N // kk
    L = math.sqrt(2 * math.pi * kk)
    lv_plus = n_lev if k > 0 else n_lev - 1
    lv_minus = n_lev - 1 if k > 0 else n_lev
    Dp = np.zeros((lv_minus * kk, lv_plus * kk), complex)
    for n in range(lv_plus):
        for j in range(kk):
            if k > 0 and n > 0:
                Dp[(n - 1) * kk + j, n * kk + j] = -1j * math.sqrt(2 * n)
            elif k < 0:
                Dp[(n + 1) * kk + j, n * kk + j] = 1j * math.sqrt(2 * (n + 1))

    cache = {}

    def E(a, b, levels):
        key = (a, b)
        if key not in cache:
            kappa = 2 * math.pi / L
            qx, qy = kappa * a, kappa * b
            beta = 1j * (qx + 1j * qy) / math.sqrt(2) if k > 0 else 1j * (qx - 1j * qy) / math.sqrt(2)
            cache[key] = (displacement(beta, n_lev), guiding_center(a, b, k))
        G, W = cache[key]
        return np.kron(G[:levels, :levels], W)

    def multiplier(values):
        coeffs = _fourier_coefficients(np.asarray(values, dtype=complex).reshape(N, N))
        plus = np.zeros((lv_plus * kk,) * 2, complex)
        minus = np.zeros((lv_minus * kk,) * 2, complex)
        for (a, b), c in coeffs.items():
            plus += c * E(a, b, lv_plus)
            minus += c * E(a, b, lv_minus)
        return GradedMatrix.block_diagonal(plus, minus)

    geom = _torus_geometry(N, L)
    return DiracModel(
        "torus", GradedMatrix.dirac(Dp), geom, k, multiplier,
        {"N": N, "k": k, "L": L, "levels": n_lev, "E": E},
        monomial_spectrum(Dp),
    )


def _torus_geometry(N, L):
    g = (np.arange(N) + 0.0) * (L / N)
    X, Y = np.meshgrid(g, g, indexing="ij")
    pos = np.column_stack([X.ravel(), Y.ravel()])
    return LatticeGeometry(pos, np.full(N * N, (L / N) ** 2), (L, L), 2, None)


def _torus_plane_waves(N):
    L = 2 * math.pi
    M = N // 2 - 1
    modes = [(m1, m2) for m1 in range(-M, M + 1) for m2 in range(-M, M + 1)]
    Dp = np.diag([complex(m1, m2) for m1, m2 in modes])
    index_of = {m: i for i, m in enumerate(modes)}

    def multiplier(values):
        coeffs = _fourier_coefficients(np.asarray(values, dtype=complex).reshape(N, N))
        out = np.zeros((len(modes),) * 2, complex)
        for (a, b), c in coeffs.items():
            for i, (m1, m2) in enumerate(modes):
                j = index_of.get((m1 - a, m2 - b))
                if j is not None:
                    out[i, j] += c
        return GradedMatrix.block_diagonal(out, out.copy())

    return DiracModel(
        "torus", GradedMatrix.dirac(Dp), _torus_geometry(N, L), 0, multiplier,
        {"N": N, "k": 0, "L": L, "modes": M}, monomial_spectrum(Dp),
    )


# ---------------------------------------------------------------------------
# kernel decay


def _line_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def decay_fit(d: np.ndarray, norms: np.ndarray, tail: float = 1e-6, floor: float = 1e-13) -> dict:
    """Exponential decay rate of an oscillating kernel profile.

    Norms are binned by distance (maximum per bin).  The decay envelope of an
    oscillating kernel is traced by its local maxima, so the line is fitted
    through the peaks that lie beyond the global maximum, below ``tail``
    times the peak value and above the ``floor`` of rounding noise.  Short
    samples fall back to all such peaks, then to the tail supremum of the
    profile.
    """
    ud = np.unique(np.round(d, 12))
    if len(ud) < 3:
        raise ValueError("degenerate sample: fewer than three distinct distances")
    best = np.array([norms[np.abs(d - x) < 1e-10].max() for x in ud])
    top = best.max()
    rel = best / top
    beyond = ud > ud[np.argmax(best)]
    peaks = np.r_[False, (best[1:-1] >= best[:-2]) & (best[1:-1] >= best[2:]), False]
    sel = peaks & beyond & (rel <= tail) & (rel > floor)
    method = "tail peaks"
    if sel.sum() < 3:
        sel = peaks & beyond & (rel > floor)
        method = "peaks"
    if sel.sum() < 3:
        env = np.maximum.accumulate(best[::-1])[::-1]
        sel = env / top > floor
        best = env
        method = "tail supremum"
    if sel.sum() < 3:
        raise ValueError("degenerate sample: kernel is below the noise floor")
    slope, intercept, r2 = _line_fit(ud[sel], np.log(best[sel]))
    return {"slope": slope, "intercept": intercept, "r2": r2, "points": int(sel.sum()), "method": method}


def kernel_parts(ind: GradedMatrix) -> tuple[GradedMatrix, GradedMatrix]:
    """The ``f_t(D)`` (diagonal) and ``g_t(D)`` (off-diagonal) parts of the idempotent."""
    dp, dm = ind.dims
    f_part = GradedMatrix.block_diagonal(ind.pp, -ind.mm)
    g_part = GradedMatrix(np.zeros((dp, dp), complex), ind.pm, ind.mp, np.zeros((dm, dm), complex))
    return f_part, g_part


def kernel_decay_scan(model: DiracModel, t_grid, base_sites=(0,), tail: float = 1e-6,
                      floor: float = 1e-13) -> list[dict]:
    """Fit ``log ||K(x, y)||`` against ``d(x, y)`` for the ``f_t(D)`` and ``g_t(D)`` kernels.

    The ``g`` fit measures the exponential rate (see :func:`decay_fit`).  The
    ``f`` kernel is a Gaussian in ``d / t`` plus the smooth projector left by
    the truncated mode, so its log-linear fit is reported for information.
    """
    geom = model.geometry
    rows = []
    for t in t_grid:
        f_part, g_part = kernel_parts(model.ind(t))
        row = {"t": float(t)}
        for label, A in (("f", f_part), ("g", g_part)):
            K = geom.kernel(A)
            ds, ns, diag = [], [], []
            for x in base_sites:
                ds.append(geom.distances_from(x))
                ns.append(np.linalg.norm(K[x], axis=(0, 2)))
                diag.append(np.linalg.norm(K[x, :, x, :]))
            fit = decay_fit(np.concatenate(ds), np.concatenate(ns), tail, floor)
            row.update({f"{label}_{key}": val for key, val in fit.items()})
            row[f"{label}_diag"] = float(max(diag))
        rows.append(row)
    return rows


def decay_model(N: int = 192, length: float = 16.0) -> DiracModel:
    """Circle long enough (in units of ``t``) to reach the exponential tail of the ``g_t`` kernel."""
    return circle_dirac(N, 1, length)


def measured_decay_rate(model: DiracModel, t: float) -> tuple[float, str]:
    """Decay rate ``u`` of the ``Ind_t`` kernel: fitted where a synthesis map exists.

    Otherwise the rate of the ``g_t`` Fourier transform, ``sqrt(pi) / t``,
    is used (the nearest complex singularity of ``g_t`` has imaginary part
    ``sqrt(pi) / t``).
    """
    if model.geometry.synthesis is not None:
        row = kernel_decay_scan(model, [t])[0]
        return -row["g_slope"], "fitted"
    return math.sqrt(math.pi) / t, "analytic"


# ---------------------------------------------------------------------------
# cochains and the pairing


@dataclass(frozen=True)
class SmoothFunction:
    """A function on the model space with its closed-form gradient."""

    value: object
    grad: object
    label: str = ""


@dataclass
class Cochain:
    """Function of ``arity`` points with a growth exponent ``v``.

    ``evaluator`` takes ``arity`` position arrays (broadcastable, last axis is
    the coordinate) and returns values.  ``factors`` is set for the
    antisymmetrization of a product ``f_0 (x) ... (x) f_q``.
    """

    arity: int
    evaluator: object
    growth: float = 0.0
    antisymmetric: bool = False
    cyclic: bool = False
    factors: tuple | None = None
    label: str = ""

    @classmethod
    def constant(cls, value: float = 1.0) -> "Cochain":
        f = SmoothFunction(lambda x: np.full(np.shape(x)[:-1], value, dtype=float),
                           lambda x: np.zeros(np.shape(x)), f"const {value}")
        return cls(1, f.value, 0.0, True, True, (f,), f"constant {value}")

    @classmethod
    def antisymmetrized(cls, factors) -> "Cochain":
        factors = tuple(factors)
        q1 = len(factors)

        def ev(*xs):
            total = 0.0
            for perm in itertools.permutations(range(q1)):
                term = _perm_sign(perm)
                for slot, fi in enumerate(perm):
                    term = term * factors[fi].value(xs[slot])
                total = total + term
            return total

        return cls(q1, ev, 0.0, True, False, factors, "antisymmetrized product")

    @classmethod
    def exponential(cls, arity: int, v: float, geometry: LatticeGeometry, base: int = 0) -> "Cochain":
        """``exp(v * sum_i d(x_i, z_0))``: growth exactly ``v``."""
        z0 = geometry.positions[base]
        periods = np.asarray(geometry.periods, dtype=float)

        def dist(x):
            delta = np.abs(np.asarray(x) - z0) % periods
            delta = np.minimum(delta, periods - delta)
            return np.sqrt(np.sum(delta**2, axis=-1))

        def ev(*xs):
            return np.exp(v * sum(dist(x) for x in xs))

        return cls(arity, ev, v, False, False, None, f"exp growth {v}")

    def __call__(self, *xs):
        return self.evaluator(*xs)


def _perm_sign(perm) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def check_growth(psi: Cochain, u: float, r_M: float = 0.0) -> None:
    q = psi.arity - 1
    if q * psi.growth - u >= -r_M:
        raise GrowthError(
            f"cochain growth v = {psi.growth} with q = {q} is not dominated by kernel decay u = {u:.4g}: "
            f"q*v - u = {q * psi.growth - u:.4g} >= -r_M = {-r_M}"
        )


def tau_pairing(psi: Cochain, A: GradedMatrix, model: DiracModel, *, route: str = "auto",
                decay_rate: float | None = None, r_M: float = 0.0, mults=None) -> complex:
    """``int psi(x_0..x_q) tr(A(x_0,x_1) ... A(x_q,x_0)) dmu^{q+1}`` (cutoff ``c = 1``).

    ``route="operator"`` uses multiplication operators and needs a product
    cochain; ``route="tuples"`` sums over all site tuples and needs a
    synthesis map.  ``decay_rate`` overrides the measured kernel decay in the
    growth check (the check is skipped for bounded product cochains only if
    the rate is positive).  ``mults`` may carry precomputed multiplication
    operators for the factors, as returned by :func:`factor_multipliers`.
    """
    if psi.growth > 0 or decay_rate is not None:
        u = decay_rate if decay_rate is not None else measured_decay_rate(model, 1.0)[0]
        check_growth(psi, u, r_M)
    if route == "auto":
        route = "operator" if psi.factors is not None else "tuples"
    if route == "operator":
        if psi.factors is None:
            raise ValueError("operator route needs a product cochain")
        return _tau_operator(psi, A, model, mults)
    if route == "tuples":
        return _tau_tuples(psi, A, model)
    raise ValueError(f"unknown route {route!r}")


def factor_multipliers(psi: Cochain, model: DiracModel) -> list:
    pos = model.geometry.positions
    return [model.multiplier(f.value(pos)) for f in psi.factors]


_FLUSH = 1e-150


def _flushed(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    a[np.abs(a) < _FLUSH] = 0
    return a


def _tau_operator(psi, A, model, mults=None):
    if mults is None:
        mults = factor_multipliers(psi, model)
    q1 = psi.arity
    if q1 == 1:
        return (mults[0] @ A).trace()
    # The trace is invariant under cyclic rotation, and rotating q1 slots has
    # sign (-1)^(q1-1): even arity cancels exactly, odd arity repeats each
    # class q1 times.  Only permutations fixing the first slot are summed.
    if q1 % 2 == 0:
        return 0j
    # Entries below _FLUSH cannot move the trace at double precision, but their
    # products land in the subnormal range where BLAS slows down badly.
    Af = _flushed(A.full())
    if np.count_nonzero(Af) < 0.05 * Af.size:
        Af = sparse.csr_matrix(Af)
    B = [_flushed(np.asarray(m.full() @ Af)) for m in mults]
    total = 0j
    for rest in itertools.permutations(range(1, q1)):
        prod = B[0]
        for fi in rest[:-1]:
            prod = prod @ B[fi]
        total += _perm_sign((0,) + rest) * np.sum(prod * B[rest[-1]].T)
    return q1 * total


def _tau_tuples(psi, A, model):
    geom = model.geometry
    K = geom.kernel(A)
    w = geom.weights
    pos = geom.positions
    q1 = psi.arity
    if q1 == 1:
        vals = psi(pos)
        return complex(np.sum(vals * np.einsum("xaxa->x", K) * w))
    if q1 == 2:
        T = np.einsum("xayb,ybxa->xy", K, K)
        vals = psi(pos[:, None, :], pos[None, :, :])
        return complex(np.sum(vals * T * w[:, None] * w[None, :]))
    if q1 == 3:
        T = np.einsum("xayb,ybzc,zcxa->xyz", K, K, K)
        vals = psi(pos[:, None, None, :], pos[None, :, None, :], pos[None, None, :, :])
        return complex(np.sum(vals * T * w[:, None, None] * w[None, :, None] * w[None, None, :]))
    raise ValueError("tuple route supports arity <= 3 (cost grows as N^arity)")


# ---------------------------------------------------------------------------
# the local target and the t-sweep


def omega_density(factors, positions) -> np.ndarray:
    """``dx ^ dy`` coefficient of ``sum_sigma sgn(sigma) f_s0 df_s1 ^ df_s2`` (closed-form gradients)."""
    vals = [f.value(positions) for f in factors]
    grads = [f.grad(positions) for f in factors]
    out = np.zeros(len(positions), dtype=complex)
    for perm in itertools.permutations(range(3)):
        a, b, c = perm
        wedge = grads[b][:, 0] * grads[c][:, 1] - grads[b][:, 1] * grads[c][:, 0]
        out += _perm_sign(perm) * vals[a] * wedge
    return out


def pairing_prefactor(n: int, q: int) -> complex:
    """``(-1)^{n/2-q} (2 pi i)^{n/2-2q} q!/(2q)!``."""
    return (-1) ** (n // 2 - q) * (2j * math.pi) ** (n // 2 - 2 * q) * math.factorial(q) / math.factorial(2 * q)


def pairing_target(psi: Cochain, model: DiracModel, rank: int = 1) -> complex:
    """Local formula on a surface at 2q = 2: only the rank part of A-hat ^ ch meets the 2-form.

    The density is integrated with the flat-torus quadrature of
    :mod:`charclass` on the model's own grid.
    """
    if psi.arity != 3 or psi.factors is None:
        raise ValueError("target is implemented for antisymmetrized products of three functions")
    geom = model.geometry
    L = geom.periods[0]
    N = int(round(math.sqrt(geom.n_sites)))
    surface = flat_torus(L, L, N, model.index)
    density = rank * omega_density(psi.factors, geom.positions)
    return pairing_prefactor(2, 1) * integrate_density(density, surface)


def torus_test_functions(L: float):
    """``f0 = cos(kx) cos(ky)``, ``f1 = sin(kx)``, ``f2 = sin(ky)`` with ``k = 2 pi / L``."""
    kap = 2 * math.pi / L

    def f0(p):
        return np.cos(kap * p[..., 0]) * np.cos(kap * p[..., 1])

    def g0(p):
        return np.stack([-kap * np.sin(kap * p[..., 0]) * np.cos(kap * p[..., 1]),
                         -kap * np.cos(kap * p[..., 0]) * np.sin(kap * p[..., 1])], axis=-1)

    def f1(p):
        return np.sin(kap * p[..., 0])

    def g1(p):
        return np.stack([kap * np.cos(kap * p[..., 0]), np.zeros(np.shape(p)[:-1])], axis=-1)

    def f2(p):
        return np.sin(kap * p[..., 1])

    def g2(p):
        return np.stack([np.zeros(np.shape(p)[:-1]), kap * np.cos(kap * p[..., 1])], axis=-1)

    return (SmoothFunction(f0, g0, "cos x cos y"), SmoothFunction(f1, g1, "sin x"),
            SmoothFunction(f2, g2, "sin y"))


def levels_for(t: float, truncation_tol: float = 1e-6) -> int:
    """Landau levels needed on the unit-magnetic-length torus so that ``exp(-t^2 lambda_max) < truncation_tol``."""
    return math.ceil(-math.log(truncation_tol) / (2 * t * t)) + 2


def pairing_limit_sweep(psi: Cochain, model: DiracModel, t_grid, truncation_tol: float = 1e-6) -> dict:
    """``tau(psi)(Ind_t)`` over ``t_grid`` against the local target.

    ``truncation_weight`` is ``exp(-t^2 lambda_max)``, the heat weight left on
    the highest retained mode; rows where it exceeds ``truncation_tol`` are
    flagged as dominated by truncation.
    """
    u_rows = []
    for t in t_grid:
        u, how = measured_decay_rate(model, t) if psi.growth > 0 else (math.sqrt(math.pi) / t, "analytic")
        check_growth(psi, u)
        u_rows.append((u, how))
    target = pairing_target(psi, model) if psi.arity == 3 else complex(model.index)
    rows = []
    lam = model.lambda_max()
    mults = factor_multipliers(psi, model) if psi.factors is not None else None
    for t, (u, how) in zip(t_grid, u_rows):
        val = tau_pairing(psi, model.ind(t), model, mults=mults)
        weight = math.exp(-(t**2) * lam)
        rows.append({
            "t": float(t),
            "tau": val,
            "target": target,
            "abs_err": abs(val - target),
            "rel_err": abs(val - target) / abs(target) if target != 0 else abs(val),
            "truncation_weight": weight,
            "safe": weight < truncation_tol,
            "decay_rate": u,
            "decay_source": how,
        })
    errs = [r["abs_err"] for r in rows]
    safe = [r["t"] for r in rows if r["safe"]]
    return {
        "rows": rows,
        "target": target,
        "monotone": all(b < a for a, b in zip(errs, errs[1:])),
        "smallest_safe_t": min(safe) if safe else None,
    }


def random_dirac(rng: np.random.Generator, d_plus: int, d_minus: int, scale: float = 1.0) -> GradedMatrix:
    Dp = scale * (rng.normal(size=(d_minus, d_plus)) + 1j * rng.normal(size=(d_minus, d_plus)))
    return GradedMatrix.dirac(Dp)


__all__ = [
    "GrowthError",
    "GradedMatrix",
    "graded_unit",
    "SchwartzPair",
    "Spectrum",
    "spectral_decomposition",
    "wassermann_class",
    "projection_from_class",
    "idempotency_residual",
    "selfadjoint_residual",
    "str_index",
    "mckean_singer",
    "kernel_dimensions",
    "LatticeGeometry",
    "DiracModel",
    "circle_dirac",
    "displacement",
    "displacement_laguerre",
    "displacement_expm",
    "monomial_spectrum",
    "guiding_center",
    "torus_dirac",
    "decay_fit",
    "kernel_parts",
    "kernel_decay_scan",
    "decay_model",
    "measured_decay_rate",
    "SmoothFunction",
    "Cochain",
    "check_growth",
    "tau_pairing",
    "factor_multipliers",
    "levels_for",
    "omega_density",
    "pairing_prefactor",
    "pairing_target",
    "torus_test_functions",
    "pairing_limit_sweep",
    "random_dirac",
]
