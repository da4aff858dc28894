"""
Two routes to a local solution of y'^2 + y^2 = 1
================================================

At (pi/2, 1, 0) the partial derivative of F with respect to y' vanishes, so
y' cannot be isolated.  Solving for y instead works, and a quadratic ansatz
recovers the Taylor polynomial of sin(x).  The series-expansion route reaches
the same polynomial by annihilating coefficients of the expanded residual.
"""

from __future__ import annotations

import math

import numpy as np

from implicit_ode import (
    Degenerate,
    build_psi_form,
    check_base_point,
    compare_with_implicit,
    expand_residual,
    implicit_jet,
    parse,
    solve_branches,
    solve_psi_form,
)

F = parse("p^2 + q^2 - 1")
T0 = (math.pi / 2, 1.0, 0.0)

try:
    check_base_point(F, T0, "q")
except Degenerate as exc:
    print("solving for y' fails:", exc)

# Solve for y as a function of (x, y') instead.
base = check_base_point(F, T0, "p")
ode = build_psi_form(implicit_jet(F, base, (1, 2)))
print("psi form:", ode.to_text())

# The ansatz a + b x + c x^2 gives two branches; the slope condition selects them.
for sol in solve_psi_form(ode, "slope"):
    print(f"{sol.label:8s} y = {sol.to_expr()}")

primary = solve_psi_form(ode, "slope")[0]
xs = np.linspace(math.pi / 2 - 0.5, math.pi / 2 + 0.5, 101)
print("max |u - sin| on pi/2 +- 0.5:", np.max(np.abs(primary(xs) - np.sin(xs))))
print("Taylor remainder bound 0.5^4/24:", 0.5**4 / 24)

# The series route: unknown derivatives y0, y1, y2, ... at x0.
equations = expand_residual(F, math.pi / 2, 2)
for k, eq in enumerate(equations):
    print(f"coefficient {k}: {eq}")
for branch in solve_branches(equations, {0: 1.0, 1: 0.0}):
    print("branch y''(pi/2) =", branch[2], "->", branch.polynomial(2, math.pi / 2))

report = compare_with_implicit(F, base, 2)
print("routes agree:", report.matched, "largest delta:", report.best.max_delta)
