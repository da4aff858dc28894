"""
A third-order local approximation of a Bernoulli equation
=========================================================

y' = -3 sin(x) y^(4/3) with y(pi/3) = 1 has the exact solution
-27 / (-9/2 + 3 cos x)^3.  Keeping terms up to third order in x but only
first order in y gives a linear equation whose solution matches the exact
one to second order around pi/3.  The third x-derivative of the implicit
function is computed three ways here, since it is easy to get wrong by hand.
"""

from __future__ import annotations

import math

import numpy as np

from implicit_ode import (
    ExprCurve,
    build_normal_form,
    check_base_point,
    compare_trajectories,
    finite_difference_jet,
    implicit_jet,
    parse,
    solve_normal_form,
    taylor_coefficients,
)

F = parse("-3*sin(x)*p^(4/3) - q")
x0 = math.pi / 3
base = check_base_point(F, (x0, 1.0, -1.5 * math.sqrt(3)), "q")
jet = implicit_jet(F, base, (3, 1))

# Recursive total differentiation, a hand derivative of the explicit form,
# and a fourth-order finite-difference stencil on a numerical continuation.
print("D(3,0) recursive       :", jet[3, 0])
print("D(3,0) 3 cos(x0)       :", 3 * math.cos(x0))
print("D(3,0) finite difference:", finite_difference_jet(F, base, (3, 0), 1e-3)[3, 0])

ode = build_normal_form(jet)
sol = solve_normal_form(ode)
print("approximated equation:", ode.to_text())
print("solution:", sol.to_expr())

# Compare expansions in u = pi - 3x, where x - pi/3 = -u/3.
scale = np.array([(-1 / 3) ** k for k in range(4)])
exact_expr = parse("-27/(-9/2 + 3*cos(x))^3", variables=("x",))
exact_taylor = taylor_coefficients(exact_expr, {"x": x0}, (3,))
print("approximate in u:", sol.taylor(3) * scale)
print("exact in u      :", np.array([exact_taylor[k] for k in range(4)]) * scale)

# The linear approximation carries an exponential that dominates far from x0.
exact = ExprCurve(exact_expr, "x")
for half_width in (0.1, 0.3, 1.0):
    rep = compare_trajectories(sol, exact, (x0 - half_width, x0 + half_width), 201)
    print(f"max error on x0 +- {half_width}: {rep.max_abs_error:.3e}")
