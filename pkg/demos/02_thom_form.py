"""A Thom representative on a rank-n fiber and its fiber integral.

Run: python demos/02_thom_form.py
"""

import math

import numpy as np

from indexbench.charclass import SkewMat
from indexbench.mathai_quillen import (
    THOM_PROFILES,
    fiber_d,
    fiber_integral,
    random_numeric_curvature,
    riemann_roch_flat_check,
    thom_form,
)

n = 4
rng = np.random.default_rng(1)
Om = random_numeric_curvature(n, rng)
print(f"random curvature, spectral radius {Om.spectral_radius():.3f} (below pi = {math.pi:.3f})")

# Gaussian profile: every fiber integral is an exact Wick moment.
U = thom_form(Om)
print("Gaussian representative:", U)
print("  fiber integral =", fiber_integral(U).scalar_part())

# Compact profiles: radial quadrature over the shell where the cutoff moves.
for name in ("bump", "wide-bump"):
    val = fiber_integral(thom_form(Om, profile=THOM_PROFILES[name])).scalar_part()
    print(f"  {name:9s} profile: 1 + {val - 1:.2e}")

# With zero curvature the Gaussian form is closed in the fiber directions.
flat = thom_form(SkewMat.from_upper(n, 0, {}))
print("d U = 0 at zero curvature:", all(not c.terms for c in fiber_d(flat).terms.values()))

# Spinor Chern character over a flat fiber, integrated against the fiber.
for k in (2, 4, 6):
    rep = riemann_roch_flat_check(k)
    print(f"n = {k}: integral / pi^(n/2) = {rep['coefficient_over_pi_power']}, "
          f"value {rep['value']:.6g}, (-2 pi i)^(n/2) = {(-2j * math.pi) ** (k // 2):.6g}")
