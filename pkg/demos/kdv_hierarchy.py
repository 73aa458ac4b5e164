"""Walk through the KdV fifth-order flow and the w-equation recursion operator.

Run with ``python3 demos/kdv_hierarchy.py``.
"""

from __future__ import annotations

from jetalg import catalog as C
from jetalg.diffalg import EvolutionEquation, combine, solve_linear_ansatz, symmetry_residual
from jetalg.expr import jet
from jetalg.parser import parse
from jetalg.psdo import apply_psdo, integrate_total, w_recursion

u = [jet("u", k) for k in range(6)]
kdv = EvolutionEquation(parse("u3 + u*u1"))
print("equation:", kdv)

# which combinations of the weight-7 monomials are symmetries?
basis = [u[5], u[0] * u[3], u[1] * u[2], u[0] ** 2 * u[1]]
(sol,) = solve_linear_ansatz(kdv, basis)
print("coefficients:", [str(c) for c in sol])
G5 = combine(sol, basis)
print("residual of the fifth-order flow:", symmetry_residual(kdv, G5).verdict)

# a non-symmetry leaves a visible residual
r = symmetry_residual(kdv, u[2])
print("u2 gives residual", r.expression, r.verdict.to_dict())

# formal integration behind the nonlocal term of the recursion operator
w = [jet("w", k) for k in range(6)]
e = w[2] * w[3] / w[1] ** 2 - w[2] ** 3 / w[1] ** 3
print("D^-1 of", e, "=", integrate_total(e, "w"))

L = w_recursion()
print("operator:", L)
weq = C.get_equation("w_eq")
G = w[1]
for step in range(3):
    G = apply_psdo(L, G, "w")
    print(f"L^{step + 1}(w1) = {G}")
    print("   symmetry:", symmetry_residual(weq, G).verdict)
