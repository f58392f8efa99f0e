"""Supertraces of Clifford exponentials, computed two ways.

Run: python demos/01_supertrace_identities.py
"""

import math
import random
from fractions import Fraction

from indexbench.algebra_core import ExtElem
from indexbench.charclass import SkewMat, pfaffian
from indexbench.clifford import CliffElem, supertrace, supertrace_unit
from indexbench.mathai_quillen import (
    check_grand_identity,
    check_str_exp,
    random_nilpotent_skew,
)

# In C_2 with g_i^2 = 1 the bivector g1 g2 squares to -1, so
# exp(theta g1 g2) = cos(theta) + sin(theta) g1 g2 and only the top
# monomial survives the supertrace.
print("Str of the top monomial in C_2:", supertrace_unit(2))
theta = 0.9
rep = check_str_exp(SkewMat.from_upper(2, 0, {(1, 2): theta}))
print(f"theta = {theta}: brute force {complex(rep.lhs.scalar_part()):.12f}")
print(f"            closed form {complex(rep.rhs.scalar_part()):.12f}")
print(f"            2i sin(theta) = {2j * math.sin(theta):.12f}")

# Entries that are 2-forms in a few Grassmann generators make every series
# finite, so the comparison is exact rational arithmetic.
rng = random.Random(3)
omega = random_nilpotent_skew(4, 6, rng)
rep = check_str_exp(omega)
print("\nn = 4 with nilpotent entries")
print("  Pf(omega) =", pfaffian(omega))
print("  exact:", rep.exact, " equal:", rep.lhs == rep.rhs)

# Adding an odd source J_k g_k and a linear prefactor sum c_k g_k: the
# expansion has Pfaffian minors of every size on the right.
c = [Fraction(rng.randint(-3, 3)) for _ in range(4)]
rep = check_grand_identity(omega, c)
print("\nlinear prefactor times exponential, n = 4")
print("  terms on each side:", len(rep.lhs.terms), " equal:", rep.passed)
print("  convention note:", rep.notes[0])

# A single element, for the curious: Str(g1 g2 g3 g4) carries (2i)^2 = -4.
top = CliffElem(4, 0, {0b1111: ExtElem.one(0)})
print("\nStr(g1 g2 g3 g4) =", supertrace(top))
