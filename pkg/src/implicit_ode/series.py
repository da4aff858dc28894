"""Series-expansion route: annihilate the Taylor coefficients of F(x, y, y').

``y`` is replaced by a truncated Taylor polynomial whose derivatives at
``x0`` are unknown symbols ``y0, y1, y2, ...`` (``yk`` stands for
``y^(k)(x0)``).  The coefficient of each power of ``(x - x0)`` in the
expansion of ``F(x, y(x), y'(x))`` must vanish, which gives a triangular
algebraic system solved one new unknown at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import NoRealRoot, UnderDetermined
from .expr import Expr, Num, Var, differentiate, evaluate, lift, simplify, substitute, total_derivative
from .jet import BasePoint, Mode, implicit_jet, independent_variable
from .local import _shift, build_normal_form, build_psi_form, solve_normal_form, solve_psi_form

MAX_ORDER = 3


def unknown(k: int) -> str:
    return f"y{k}"


def _index(name: str) -> int | None:
    if name.startswith("y") and name[1:].isdigit():
        return int(name[1:])
    return None


def expand_residual(F: Expr, x0, order: int, indep: str | None = None) -> list[Expr]:
    """Coefficients of ``(x - x0)^k``, ``k = 0..order``, of ``F(x, y(x), y'(x))``.

    Each coefficient is returned as an expression in the unknowns
    ``y0 .. y(order+1)``.  ``x0`` may be a number or a constant expression
    such as ``parse("pi/2", variables=())``.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"series order must be between 0 and {MAX_ORDER}")
    X = independent_variable(F, indep)
    current = simplify(substitute(F, {"p": Var(unknown(0)), "q": Var(unknown(1))}))
    at_base = {X: lift(x0)}
    equations = []
    for k in range(order + 1):
        if k:
            chain = {}
            for name in current.variables:
                j = _index(name)
                if j is not None:
                    chain[name] = Var(unknown(j + 1))
            current = total_derivative(current, X, chain)
        equations.append(simplify(substitute(current, at_base) / math.factorial(k)))
    return equations


@dataclass(frozen=True)
class DerivativeBranch:
    """Values ``y^(k)(x0)`` fixed by one chain of root choices."""

    values: Mapping[int, float]
    provenance: tuple[str, ...] = field(default=())

    def __getitem__(self, k: int) -> float:
        return self.values[k]

    def taylor(self, order: int) -> np.ndarray:
        """Coefficients ``y^(k)(x0) / k!``; undetermined derivatives give NaN."""
        return np.array(
            [self.values.get(k, math.nan) / math.factorial(k) for k in range(order + 1)]
        )

    def polynomial(self, order: int, x0: float) -> np.ndarray:
        """The truncated Taylor solution in powers of x."""
        return _shift(self.taylor(order), x0)

    def residuals(self, equations: Sequence[Expr]) -> list[float]:
        """Equation values with this branch substituted (undetermined unknowns set to 0 and 1)."""
        out = []
        for eq in equations:
            worst = 0.0
            for filler in (0.0, 1.0):
                bind = {}
                for name in eq.variables:
                    k = _index(name)
                    bind[name] = self.values.get(k, filler) if k is not None else math.nan
                worst = max(worst, abs(evaluate(eq, bind)))
            out.append(worst)
        return out


def _univariate_roots(eq: Expr, name: str, tol: float) -> list[float] | None:
    """Real roots of a polynomial equation of degree <= 2 in ``name``.

    Returns ``None`` when the equation holds identically.
    """
    d1 = differentiate(eq, name)
    d2 = differentiate(d1, name)
    if name in d2.variables or differentiate(d2, name) != Num(0):
        raise ValueError(f"equation is not polynomial of degree <= 2 in {name}: {eq}")
    at0 = {name: 0.0}
    c0, c1, c2 = evaluate(eq, at0), evaluate(d1, at0), 0.5 * evaluate(d2, at0)
    scale = max(1.0, abs(c0), abs(c1), abs(c2))
    if abs(c2) <= tol * scale:
        if abs(c1) <= tol * scale:
            return None if abs(c0) <= tol * scale else []
        return [-c0 / c1]
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < -tol * scale * scale:
        return []
    if abs(disc) <= tol * scale * scale:
        return [-c1 / (2.0 * c2)]
    r = math.sqrt(disc)
    q = -0.5 * (c1 + math.copysign(r, c1))
    return sorted({q / c2, c0 / q}, reverse=True)


def solve_branches(
    equations: Sequence[Expr], initial: Mapping[int, float], tol: float = 1e-9
) -> list[DerivativeBranch]:
    """Solve the coefficient equations in ascending order, branching on quadratic roots.

    ``initial`` fixes low-order derivatives, e.g. ``{0: y(x0), 1: y'(x0)}``.
    An equation whose unknowns are all fixed must hold within ``tol`` or the
    branch is discarded; one with a single new unknown is solved (linear or
    quadratic); two or more new unknowns raise :class:`UnderDetermined`.
    """
    branches = [DerivativeBranch(dict(initial), ())]
    for k, eq in enumerate(equations):
        grown = []
        for branch in branches:
            known = {unknown(i): Num(float(v)) for i, v in branch.values.items()}
            reduced = simplify(substitute(eq, known))
            names = sorted(n for n in reduced.variables if _index(n) is not None)
            if not names:
                if abs(evaluate(reduced, {})) <= tol:
                    grown.append(branch)
                continue
            if len(names) > 1:
                raise UnderDetermined(
                    f"coefficient {k} involves several new unknowns {names}: {reduced}"
                )
            name = names[0]
            roots = _univariate_roots(reduced, name, tol)
            if roots is None:
                grown.append(branch)
                continue
            for r, root in enumerate(roots):
                values = dict(branch.values)
                values[_index(name)] = root + 0.0  # no negative zero
                note = f"coefficient {k}: root {r + 1} of {len(roots)} for {name}"
                grown.append(DerivativeBranch(values, branch.provenance + (note,)))
        if not grown:
            raise NoRealRoot(f"coefficient {k} has no real solution on any branch")
        branches = grown
    return branches


@dataclass(frozen=True)
class BranchComparison:
    branch: DerivativeBranch
    coefficients: np.ndarray
    deltas: np.ndarray

    @property
    def max_delta(self) -> float:
        return float(np.max(self.deltas)) if np.all(np.isfinite(self.deltas)) else math.inf


@dataclass(frozen=True)
class EquivalenceReport:
    base: BasePoint
    order: int
    implicit: np.ndarray
    branches: tuple[BranchComparison, ...]
    tol: float = 1e-9

    @property
    def matched(self) -> bool:
        return bool(self.branches) and self.branches[0].max_delta <= self.tol

    @property
    def best(self) -> BranchComparison:
        return self.branches[0]


def implicit_expansion(F: Expr, base: BasePoint, order: int) -> np.ndarray:
    """Taylor coefficients about ``x0`` of the implicit-route local solution."""
    if base.mode is Mode.SOLVE_FOR_Q:
        jet = implicit_jet(F, base, (min(order, 3), 1))
        sol = solve_normal_form(build_normal_form(jet))
    else:
        jet = implicit_jet(F, base, (1, 2))
        sol = solve_psi_form(build_psi_form(jet), "slope")[0]
    return sol.taylor(order)


def compare_with_implicit(F: Expr, base: BasePoint, order: int, tol: float = 1e-9) -> EquivalenceReport:
    """Run both routes at ``base`` and compare expansions coefficient by coefficient.

    Branches are sorted by their largest coefficient deviation from the
    implicit-route solution.
    """
    implicit = implicit_expansion(F, base, order)
    equations = expand_residual(F, base.x0, order, base.indep)
    branches = solve_branches(equations, {0: base.p0, 1: base.q0}, tol)
    rows = []
    for b in branches:
        coeffs = b.taylor(order)
        deltas = np.abs(coeffs - implicit) / np.maximum(1.0, np.abs(implicit))
        rows.append(BranchComparison(b, coeffs, deltas))
    rows.sort(key=lambda r: r.max_delta)
    return EquivalenceReport(base, order, implicit, tuple(rows), tol)
