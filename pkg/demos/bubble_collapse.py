"""
Collapse of an empty spherical bubble
=====================================

The first integral of the Rayleigh equation for a cavity of initial radius
R0 is (2/3 + R'^2) R^3 = (2/3) R0^3 in units where p_f = rho = 1.  Near
t = 0 it defines R implicitly as a function of R', and the local quadratic
R0 - t^2/(2 R0) predicts collapse at sqrt(2) R0.  An energy-monitored RK4
integration of the full equation gives the reference collapse time.
"""

from __future__ import annotations

import math
import sys

from implicit_ode import (
    build_psi_form,
    check_base_point,
    collapse_time,
    compare_trajectories,
    implicit_jet,
    integrate_bubble,
    solve_psi_form,
)
from implicit_ode.worked import bubble_collapse_oracle, bubble_ode

R0 = 0.1
F = bubble_ode(R0, 1.0, 1.0)
base = check_base_point(F, (0.0, R0, 0.0), "p", indep="t")
ode = build_psi_form(implicit_jet(F, base, (1, 2)))
print("psi form:", ode.to_text())

# The value condition keeps the branch that starts at rest and accelerates.
local = solve_psi_form(ode, "value")[0]
print("local solution:", local.to_expr())
print("local collapse time:", collapse_time(local), "= sqrt(2) R0 =", math.sqrt(2) * R0)

run = integrate_bubble(R0)
print("numerical collapse time:", run.collapse_time)
print("quadrature of the first integral:", bubble_collapse_oracle(R0))
print("rejected steps:", run.rejected_steps, "max drift / budget:", run.max_drift / run.drift_budget)

half = compare_trajectories(local, run.trajectory, (0.0, 0.5 * run.collapse_time), 101)
print("max |local - numeric| on the first half:", half.max_abs_error, "bound 0.05 R0 =", 0.05 * R0)

# Both curves over the whole numerical run, ready for plotting.
table = compare_trajectories(local, run.trajectory, run.trajectory.span, 201,
                             names=("t", "radius_local", "radius_numeric", "abs_error"))
if len(sys.argv) > 1:
    table.to_csv(sys.argv[1])
    print("wrote", sys.argv[1])
