"""Base-point validation and jets of the implicit function defined by F(x, p, q) = 0.

An ODE ``F(x, y, y') = 0`` is handled through the variables ``x`` (or ``t``)
for the independent variable, ``p`` for ``y`` and ``q`` for ``y'``.  Near a
base point where ``dF/dq != 0`` the equation defines ``q = phi(x, p)``; where
``dF/dp != 0`` it defines ``p = psi(x, q)``.  This module computes the
partial derivatives of ``phi`` or ``psi`` at the base point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import optimize

from .errors import Degenerate, EvaluationError, NoRootFound, ResidualTooLarge
from .expr import Add, Expr, Num, Sub, Var, differentiate, evaluate, lambdify, simplify, substitute, total_derivative

DEFAULT_RESIDUAL_TOL = 1e-9
DEFAULT_DEGENERATE_TOL = 1e-8
MAX_TOTAL_ORDER = 4


class Mode(str, enum.Enum):
    """Which coordinate the implicit function solves for."""

    SOLVE_FOR_Q = "q"  # q = phi(x, p): normal form y' = phi(x, y)
    SOLVE_FOR_P = "p"  # p = psi(x, q): y = psi(x, y')

    @property
    def solved(self) -> str:
        return self.value

    @property
    def free(self) -> str:
        return "p" if self is Mode.SOLVE_FOR_Q else "q"

    @classmethod
    def coerce(cls, value) -> Mode:
        if isinstance(value, Mode):
            return value
        return cls(str(value).lower())


def independent_variable(F: Expr, indep: str | None = None) -> str:
    """Name of the independent variable used by ``F`` (``x`` unless only ``t`` appears)."""
    names = F.variables
    if indep is not None:
        if indep not in ("x", "t"):
            raise ValueError(f"independent variable must be x or t, not {indep!r}")
        if ({"x", "t"} - {indep}) & names:
            raise ValueError(f"equation uses the other independent variable than {indep!r}")
        return indep
    if "x" in names and "t" in names:
        raise ValueError("an equation may use x or t as independent variable, not both")
    return "t" if "t" in names else "x"


@dataclass(frozen=True)
class BasePoint:
    """A point ``T0 = (x0, p0, q0)`` on the zero set of F plus the solve-for mode."""

    x0: float
    p0: float
    q0: float
    mode: Mode = Mode.SOLVE_FOR_Q
    indep: str = "x"
    residual: float = 0.0
    pivot: float = float("nan")  # dF/d(solved variable) at T0

    @property
    def coords(self) -> dict[str, float]:
        return {self.indep: self.x0, "p": self.p0, "q": self.q0}

    @property
    def solved_value(self) -> float:
        return self.q0 if self.mode is Mode.SOLVE_FOR_Q else self.p0

    @property
    def free_value(self) -> float:
        return self.p0 if self.mode is Mode.SOLVE_FOR_Q else self.q0


def _residual_scale(F: Expr, point: Mapping[str, float]) -> float:
    """Sum of magnitudes of the top-level additive terms of F at ``point``."""
    terms, stack = [], [F]
    while stack:
        node = stack.pop()
        if isinstance(node, (Add, Sub)):
            stack.extend((node.left, node.right))
        else:
            terms.append(node)
    return sum(abs(evaluate(t, point)) for t in terms)


def partial_at(F: Expr, point: Mapping[str, float], *names: str) -> float:
    """Mixed partial of F with respect to ``names`` (in order), evaluated at ``point``."""
    e = F
    for name in names:
        e = differentiate(e, name)
    return evaluate(e, point)


def check_base_point(
    F: Expr,
    T0,
    mode=Mode.SOLVE_FOR_Q,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    degenerate_tol: float = DEFAULT_DEGENERATE_TOL,
    indep: str | None = None,
) -> BasePoint:
    """Validate the implicit-function hypotheses at ``T0 = (x0, p0, q0)``.

    The residual test is relative: ``|F(T0)| <= residual_tol * (1 + s)`` where
    ``s`` sums the magnitudes of the top-level additive terms of F.  Raises
    :class:`ResidualTooLarge` or :class:`Degenerate`; a degenerate point may
    still be valid in the other mode.
    """
    mode = Mode.coerce(mode)
    indep = independent_variable(F, indep)
    x0, p0, q0 = (float(v) for v in T0)
    point = {indep: x0, "p": p0, "q": q0}
    residual = evaluate(F, point)
    tol = residual_tol * (1.0 + _residual_scale(F, point))
    if not abs(residual) <= tol:
        raise ResidualTooLarge(abs(residual), tol)
    pivot = partial_at(F, point, mode.solved)
    if not abs(pivot) > degenerate_tol:
        raise Degenerate(mode.solved, pivot, degenerate_tol)
    return BasePoint(x0, p0, q0, mode, indep, residual, pivot)


def solve_missing_coordinate(
    F: Expr,
    x0: float | None = None,
    p0: float | None = None,
    q0: float | None = None,
    bracket=(-1.0, 1.0),
    tol: float = DEFAULT_RESIDUAL_TOL,
    samples: int = 401,
    indep: str | None = None,
) -> float:
    """Find the coordinate of ``T0`` left as ``None`` so that ``F(T0) = 0``.

    Sign changes on a uniform scan of ``bracket`` are refined with Brent's
    method.  Without a sign change (a double root, e.g. ``-q^2``) the roots of
    the derivative in the missing coordinate are tried, then a bounded
    minimisation of ``|F|``; the best candidate is accepted only if its
    residual is within ``tol``.
    """
    indep = independent_variable(F, indep)
    given = {indep: x0, "p": p0, "q": q0}
    missing = [k for k, v in given.items() if v is None]
    if len(missing) != 1:
        raise ValueError("exactly one of x0, p0, q0 must be None")
    name = missing[0]
    fixed = {k: float(v) for k, v in given.items() if v is not None}

    def residual_fn(expr):
        compiled = lambdify(expr, (name, *fixed))
        args = tuple(fixed.values())

        def f(v):
            try:
                return compiled(v, *args)
            except EvaluationError:
                return math.nan

        return f

    f = residual_fn(F)
    lo, hi = (float(b) for b in bracket)
    grid = np.linspace(lo, hi, samples)
    values = np.array([f(v) for v in grid])

    candidates = [float(v) for v, fv in zip(grid, values) if fv == 0.0]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if np.isfinite(fa) and np.isfinite(fb) and fa * fb < 0.0:
            candidates.append(optimize.brentq(f, a, b, xtol=1e-15, rtol=1e-15))

    if not candidates:
        df = residual_fn(differentiate(F, name))
        dvalues = np.array([df(v) for v in grid])
        for a, b, fa, fb in zip(grid[:-1], grid[1:], dvalues[:-1], dvalues[1:]):
            if np.isfinite(fa) and np.isfinite(fb) and fa * fb < 0.0:
                candidates.append(optimize.brentq(df, a, b, xtol=1e-15, rtol=1e-15))
            elif fa == 0.0:
                candidates.append(float(a))
        finite = np.isfinite(values)
        if finite.any():
            k = int(np.nanargmin(np.abs(values)))
            a, b = grid[max(k - 1, 0)], grid[min(k + 1, samples - 1)]
            res = optimize.minimize_scalar(
                lambda v: abs(f(v)), bounds=(a, b), method="bounded", options={"xatol": 1e-12}
            )
            candidates.append(float(res.x))

    scored = [(abs(f(c)), abs(c - 0.5 * (lo + hi)), c) for c in candidates if np.isfinite(f(c))]
    if not scored:
        raise NoRootFound(f"F cannot be evaluated on the bracket [{lo}, {hi}] for {name}")
    best_residual, _, best = min(scored)
    if best_residual > tol:
        raise NoRootFound(
            f"no root of F in {name} on [{lo}, {hi}]: min |F| = {best_residual:.3e} > {tol:.3e}"
        )
    return best


@dataclass(frozen=True)
class ImplicitJet:
    """Partial derivatives ``D(i, j)`` of the implicit function at the base point.

    ``i`` counts derivatives in the independent variable and ``j`` in the free
    variable (``p`` for ``phi(x, p)``, ``q`` for ``psi(x, q)``).
    ``D(0, 0)`` is the solved coordinate of the base point.
    """

    base: BasePoint
    orders: tuple[int, int]
    table: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __getitem__(self, idx) -> float:
        i, j = idx
        if not (0 <= i <= self.orders[0] and 0 <= j <= self.orders[1]):
            raise KeyError(f"D{idx} outside jet orders {self.orders}")
        return self.table[(i, j)]

    @property
    def mode(self) -> Mode:
        return self.base.mode

    def taylor_coefficient(self, i: int, j: int) -> float:
        return self[i, j] / (math.factorial(i) * math.factorial(j))

    def with_entry(self, idx, value: float) -> ImplicitJet:
        """Copy of the jet with one entry replaced (used to reproduce printed variants)."""
        table = dict(self.table)
        table[tuple(idx)] = float(value)
        return ImplicitJet(self.base, self.orders, table)

    def rows(self):
        for (i, j), v in sorted(self.table.items()):
            yield i, j, v


def _symbol(i: int, j: int) -> str:
    return f"D_{i}_{j}"


def implicit_jet(F: Expr, base: BasePoint, orders=(1, 1)) -> ImplicitJet:
    """Jet of the implicit function up to multi-order ``orders = (m, n)``.

    Differentiates the identity ``F(x, p, phi(x, p)) = 0`` (or
    ``F(x, psi(x, q), q) = 0``) symbolically, with unknown derivatives of the
    implicit function carried as symbols.  Each new derivative enters its
    identity linearly with coefficient ``dF/d(solved)``; it is isolated and
    evaluated using the lower-order values already found.
    """
    m, n = (int(k) for k in orders)
    if m < 0 or n < 0:
        raise ValueError("jet orders must be non-negative")
    if m + n > MAX_TOTAL_ORDER:
        raise ValueError(f"total jet order {m + n} exceeds the supported maximum {MAX_TOTAL_ORDER}")
    mode = base.mode
    X, S, R = base.indep, mode.solved, mode.free
    point = {X: base.x0, "p": base.p0, "q": base.q0}

    def symbol(i, j):
        return S if (i, j) == (0, 0) else _symbol(i, j)

    def along(expr: Expr, var: str) -> Expr:
        di, dj = (1, 0) if var == X else (0, 1)
        chain = {}
        for name in expr.variables:
            if name == S:
                chain[name] = Var(symbol(di, dj))
            elif name.startswith("D_"):
                _, a, b = name.split("_")
                chain[name] = Var(symbol(int(a) + di, int(b) + dj))
        return total_derivative(expr, var, chain)

    identities = {(0, 0): simplify(F)}
    table = {(0, 0): base.solved_value}
    values = dict(point)
    for total in range(1, m + n + 1):
        for i in range(min(total, m), -1, -1):
            j = total - i
            if j > n:
                continue
            if i > 0:
                G = along(identities[(i - 1, j)], X)
            else:
                G = along(identities[(i, j - 1)], R)
            identities[(i, j)] = G
            unknown = symbol(i, j)
            coeff = evaluate(differentiate(G, unknown), values)
            if coeff == 0.0:
                raise Degenerate(S, coeff, 0.0)
            rest = evaluate(substitute(G, {unknown: Num(0)}), values)
            table[(i, j)] = -rest / coeff
            values[unknown] = table[(i, j)]
    return ImplicitJet(base, (m, n), table)


# ---------------------------------------------------------------------------
# closed-form cross-check

@dataclass(frozen=True)
class CheckEntry:
    label: str
    index: tuple[int, int]
    expected: float
    computed: float
    note: str = ""

    @property
    def abs_delta(self) -> float:
        return abs(self.expected - self.computed)

    @property
    def rel_delta(self) -> float:
        return self.abs_delta / max(abs(self.computed), 1e-300) if self.computed else self.abs_delta

    def agrees(self, rtol: float = 1e-10) -> bool:
        return self.abs_delta <= rtol * max(1.0, abs(self.computed))


@dataclass(frozen=True)
class ClosedFormReport:
    base: BasePoint
    entries: tuple[CheckEntry, ...]

    @property
    def discrepancies(self) -> tuple[CheckEntry, ...]:
        return tuple(e for e in self.entries if not e.agrees())

    def entry(self, label: str) -> CheckEntry:
        for e in self.entries:
            if e.label == label:
                return e
        raise KeyError(label)


def jet_closed_form_check(
    F: Expr, base: BasePoint, printed: Mapping[tuple[int, int], float] | None = None
) -> ClosedFormReport:
    """Compare the recursive jet with explicit chain-rule formulas.

    Entries compare the first-order quotients, the second-order formulas in
    the independent and the free variable, a third-order formula in the
    independent variable, and the same third-order expression with free-variable
    partials in place of solved-variable partials (the variant that appears in
    some printed derivations).  ``printed`` adds entries comparing quoted
    values against the computed jet; disagreements show up in
    :attr:`ClosedFormReport.discrepancies`.
    """
    X, S, R = base.indep, base.mode.solved, base.mode.free
    pt = {X: base.x0, "p": base.p0, "q": base.q0}

    def d(*names):
        return partial_at(F, pt, *names)

    jx = implicit_jet(F, base, (3, 0))
    jr = implicit_jet(F, base, (0, 2))
    Fs = d(S)
    D10 = -d(X) / Fs
    D01 = -d(R) / Fs
    D20 = -(D10**2 * d(S, S) + 2 * D10 * d(X, S) + d(X, X)) / Fs
    D02 = -(D01**2 * d(S, S) + 2 * D01 * d(R, S) + d(R, R)) / Fs
    D30 = -(
        d(X, X, X)
        + 3 * d(X, X, S) * D10
        + 3 * d(X, S, S) * D10**2
        + d(S, S, S) * D10**3
        + 3 * d(X, S) * D20
        + 3 * d(S, S) * D10 * D20
    ) / Fs
    D30_free = -(
        3 * D10 * D20 * d(R, R)
        + D10**3 * d(R, R, R)
        + 3 * D20 * d(X, R)
        + 3 * D10**2 * d(X, R, R)
        + 3 * D10 * d(X, X, R)
        + d(X, X, X)
    ) / Fs

    entries = [
        CheckEntry("first order, independent variable", (1, 0), D10, jx[1, 0]),
        CheckEntry("first order, free variable", (0, 1), D01, jr[0, 1]),
        CheckEntry("second order, independent variable", (2, 0), D20, jx[2, 0]),
        CheckEntry("second order, free variable", (0, 2), D02, jr[0, 2]),
        CheckEntry("third order, independent variable", (3, 0), D30, jx[3, 0]),
        CheckEntry(
            "third order with free-variable partials",
            (3, 0),
            D30_free,
            jx[3, 0],
            note="chain rule with the solved variable's partials replaced by the free variable's",
        ),
    ]
    jets = {**jx.table, **jr.table}
    for idx, value in sorted((printed or {}).items()):
        entries.append(
            CheckEntry(f"printed D{tuple(idx)}", tuple(idx), float(value), jets[tuple(idx)], note="quoted value")
        )
    return ClosedFormReport(base, tuple(entries))
