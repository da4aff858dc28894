"""
From an implicit equation to exp(2x)
====================================

The equation 2y - y' = 0 is already linear, so the local approximation
reproduces the exact solution.  This walk-through shows each stage of the
pipeline on it.
"""

from __future__ import annotations

import numpy as np

from implicit_ode import (
    build_normal_form,
    check_base_point,
    implicit_jet,
    parse,
    residual_profile,
    solve_missing_coordinate,
    solve_normal_form,
)

# p stands for y and q for y'.
F = parse("2*p - q")

# Only y(0) = 1 is given; the slope at the base point is a root of F in q.
q0 = solve_missing_coordinate(F, x0=0.0, p0=1.0, bracket=(-10.0, 10.0))
base = check_base_point(F, (0.0, 1.0, q0), "q")
print("base point:", (base.x0, base.p0, base.q0))

# The jet of q = phi(x, p) up to first order in both arguments.
jet = implicit_jet(F, base, (1, 1))
for idx in sorted(jet.table):
    print(f"D{idx} = {jet[idx]!r}")

# Replace F by the truncated expansion of phi and solve that linear equation.
ode = build_normal_form(jet)
print("approximated equation:", ode.to_text())
sol = solve_normal_form(ode)
print("solution:", sol.to_expr())
print("constants:", sol.constants())

# The residual of the candidate against the original F vanishes.
report = residual_profile(F, sol, (-1.0, 1.0), 101)
print("max residual on [-1, 1]:", report.max_residual)

xs = np.linspace(-1, 1, 5)
print(np.column_stack([xs, sol(xs), np.exp(2 * xs)]))
