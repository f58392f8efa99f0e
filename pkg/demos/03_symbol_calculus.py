"""Star products of symbols and the constants of the cyclic pairing.

Run: python demos/03_symbol_calculus.py
"""

import math
import random
from fractions import Fraction

from indexbench.algebra_core import ExtElem
from indexbench.getzler import (
    Symbol,
    beta_minus_delta_exact,
    constant_combination_check,
    curv_pairing,
    model_hamiltonian,
    random_curv,
    random_symbol,
    star,
)

N = 4
R = curv_pairing(2, N, {(1, 2): ExtElem.monomial(N, (1, 2), Fraction(2))})
x1, x2 = Symbol.xi(2, N, 1), Symbol.xi(2, N, 2)
# terms are keyed by the exponent of (xi1, xi2)
print("xi1 * xi2 =", star(x1, x2, R).terms)
print("xi2 * xi1 =", star(x2, x1, R).terms)
print("commutator =", (star(x1, x2, R) - star(x2, x1, R)).terms, " with R_12 =", R.entries[0][1])

rng = random.Random(0)
R = random_curv(2, 6, rng)
a, b, c = (random_symbol(2, 6, rng) for _ in range(3))
print("\nassociative on a random triple:", star(star(a, b, R), c, R) == star(a, star(b, c, R), R))

H = model_hamiltonian(R)
print("Hamiltonian first-order part:", H.first_order_terms())

print("\nq   beta_q          delta_q         beta-delta  combination   q!/(2q)!")
for q in (1, 2, 3):
    rep = constant_combination_check(q)
    print(f"{q}   {rep['beta']:.12f}  {rep['delta']:.12f}  {str(beta_minus_delta_exact(q)):10s}  "
          f"{rep['combination']:.10f}  {rep['target_exact']}")
print("ln(3/2) =", math.log(1.5))
