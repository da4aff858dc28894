"""Local approximated ODEs built from a jet, and their closed-form solutions.

Two shapes of approximated equation are produced:

* :class:`NormalForm` -- ``y' = sum_i alpha_i (x - x0)^i + beta (y - p0)``,
  from the jet of ``q = phi(x, p)``;
* :class:`PsiForm` -- ``y = sum_(i,j) a_ij (x - x0)^i (y' - q0)^j``, from the
  jet of ``p = psi(x, q)``.

Normal forms are linear with polynomial forcing and are solved by
undetermined coefficients.  Psi forms of degree two in ``y'`` are solved with
a quadratic polynomial ansatz, returning every real branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import NoRealBranch, NoZeroCrossing, WrongMode
from .expr import Expr, Num, Var, exp, simplify
from .jet import ImplicitJet, Mode

BRANCH_TOL = 1e-10
BETA_TOL = 1e-12


def _shift(coeffs_in_delta: Sequence[float], x0: float) -> np.ndarray:
    """Coefficients in powers of x of ``sum c_k (x - x0)^k``."""
    out = np.zeros(max(len(coeffs_in_delta), 1))
    basis = np.array([1.0])
    for c in coeffs_in_delta:
        out[: len(basis)] += c * basis
        basis = P.polymul(basis, [-x0, 1.0])
    return out


def _recenter(coeffs_in_x: Sequence[float], center: float) -> np.ndarray:
    """Coefficients in powers of ``(x - center)`` of ``sum a_k x^k``."""
    out = np.zeros(max(len(coeffs_in_x), 1))
    basis = np.array([1.0])
    for a in coeffs_in_x:
        out[: len(basis)] += a * basis
        basis = P.polymul(basis, [center, 1.0])
    return out


def _poly_expr(coeffs: Sequence[float], var: Expr) -> Expr:
    out: Expr = Num(0)
    for k, c in enumerate(coeffs):
        if c != 0.0:
            out = out + Num(float(c)) * var ** k
    return out


@dataclass(frozen=True)
class ClosedFormSolution:
    """``y(x) = sum_k poly[k] x^k + amplitude * exp(rate * x)``.

    ``poly`` holds powers of the independent variable itself (not of
    ``x - x0``), so for a linear polynomial ``poly = (a0, b0)`` and
    ``amplitude, rate`` are the constants ``c0, d0`` of the first-order
    solution shape ``a0 + b0 x + c0 exp(d0 x)``.
    """

    poly: tuple[float, ...]
    amplitude: float = 0.0
    rate: float = 0.0
    x0: float = 0.0
    p0: float = 0.0
    q0: float = 0.0
    indep: str = "x"
    label: str = "primary"

    @property
    def c(self) -> float:
        """Integration constant multiplying the exponential."""
        return self.amplitude

    @property
    def has_exponential(self) -> bool:
        return self.amplitude != 0.0 and self.rate != 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = P.polyval(x, self.poly)
        if self.amplitude:
            out = out + self.amplitude * np.exp(self.rate * x)
        return out if out.ndim else float(out)

    def derivative(self, x, k: int = 1):
        x = np.asarray(x, dtype=float)
        out = P.polyval(x, P.polyder(self.poly, k)) if len(self.poly) > k else np.zeros_like(x)
        if self.amplitude:
            out = out + self.amplitude * self.rate**k * np.exp(self.rate * x)
        return out if np.ndim(out) else float(out)

    def taylor(self, order: int, center: float | None = None) -> np.ndarray:
        """Coefficients of the Taylor expansion in powers of ``(x - center)``."""
        center = self.x0 if center is None else center
        out = np.zeros(order + 1)
        shifted = _recenter(self.poly, center)
        n = min(len(shifted), order + 1)
        out[:n] = shifted[:n]
        if self.amplitude:
            scale = self.amplitude * math.exp(self.rate * center)
            for k in range(order + 1):
                out[k] += scale * self.rate**k / math.factorial(k)
        return out

    def constants(self) -> dict[str, float]:
        """``a0, b0, c0, d0`` of the shapes ``a0 + b0 x + c0 x^2`` or ``a0 + b0 x + c0 exp(d0 x)``."""
        poly = list(self.poly) + [0.0] * 3
        if self.has_exponential:
            return {"a0": poly[0], "b0": poly[1], "c0": self.amplitude, "d0": self.rate}
        return {"a0": poly[0], "b0": poly[1], "c0": poly[2], "d0": 0.0}

    def base_errors(self) -> tuple[float, float]:
        """Relative mismatch of ``y(x0)`` against ``p0`` and ``y'(x0)`` against ``q0``."""
        ev = abs(self(self.x0) - self.p0) / max(1.0, abs(self.p0))
        es = abs(self.derivative(self.x0) - self.q0) / max(1.0, abs(self.q0))
        return ev, es

    def is_constant(self) -> bool:
        tail = np.abs(np.asarray(self.poly[1:], dtype=float))
        return not self.has_exponential and bool(np.all(tail <= BRANCH_TOL * max(1.0, abs(self.poly[0]))))

    def to_expr(self) -> Expr:
        x = Var(self.indep)
        out = _poly_expr(self.poly, x)
        if self.has_exponential:
            out = out + Num(self.amplitude) * exp(Num(self.rate) * x)
        return simplify(out)


# ---------------------------------------------------------------------------
# approximated equations

class LocalODE:
    """Common base of the two approximated-equation shapes."""

    x0: float
    p0: float
    q0: float
    indep: str

    def residual(self, sol: ClosedFormSolution, xs) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class NormalForm(LocalODE):
    """``y' = sum_i alphas[i] (x - x0)^i + beta (y - p0)``."""

    x0: float
    p0: float
    q0: float
    alphas: tuple[float, ...]
    beta: float
    indep: str = "x"

    def rhs(self, x, y):
        d = np.asarray(x, dtype=float) - self.x0
        return P.polyval(d, self.alphas) + self.beta * (np.asarray(y, dtype=float) - self.p0)

    def origin_form(self) -> tuple[np.ndarray, float]:
        """``(c, beta)`` with ``y' = sum_k c[k] x^k + beta y``; centred constants moved to the origin."""
        c = _shift(self.alphas, self.x0)
        c[0] -= self.beta * self.p0
        return c, self.beta

    def residual(self, sol, xs):
        xs = np.asarray(xs, dtype=float)
        return sol.derivative(xs) - self.rhs(xs, sol(xs))

    def to_expr(self) -> Expr:
        """Right-hand side as an expression in the independent variable and ``p`` (for y)."""
        delta = Var(self.indep) - Num(self.x0)
        out = _poly_expr(self.alphas, delta)
        if self.beta:
            out = out + Num(self.beta) * (Var("p") - Num(self.p0))
        return simplify(out)

    def to_text(self) -> str:
        return f"q = {self.to_expr()}"


@dataclass(frozen=True)
class PsiForm(LocalODE):
    """``y = sum coeffs[(i, j)] (x - x0)^i (y' - q0)^j``."""

    x0: float
    p0: float
    q0: float
    coeffs: Mapping[tuple[int, int], float] = field(default_factory=dict)
    indep: str = "x"

    def __getitem__(self, idx) -> float:
        return self.coeffs.get(tuple(idx), 0.0)

    @property
    def orders(self) -> tuple[int, int]:
        m = max((i for i, _ in self.coeffs), default=0)
        n = max((j for _, j in self.coeffs), default=0)
        return m, n

    def rhs(self, x, yprime):
        d = np.asarray(x, dtype=float) - self.x0
        s = np.asarray(yprime, dtype=float) - self.q0
        return sum(c * d**i * s**j for (i, j), c in self.coeffs.items())

    def residual(self, sol, xs):
        xs = np.asarray(xs, dtype=float)
        return sol(xs) - self.rhs(xs, sol.derivative(xs))

    def to_expr(self) -> Expr:
        """Right-hand side as an expression in the independent variable and ``q`` (for y')."""
        delta = Var(self.indep) - Num(self.x0)
        slope = Var("q") - Num(self.q0)
        out: Expr = Num(0)
        for (i, j), c in sorted(self.coeffs.items()):
            if c != 0.0:
                out = out + Num(c) * delta**i * slope**j
        return simplify(out)

    def to_text(self) -> str:
        return f"p = {self.to_expr()}"


def build_normal_form(jet: ImplicitJet) -> NormalForm:
    """``y' = sum_i D(i,0)/i! (x - x0)^i + D(0,1) (y - p0)`` from a jet of ``phi(x, p)``.

    Mixed entries ``D(i, j)`` with ``i, j >= 1`` are not used.
    """
    if jet.mode is not Mode.SOLVE_FOR_Q:
        raise WrongMode("a normal form needs the jet of q = phi(x, p)")
    m, n = jet.orders
    if m > 3:
        raise ValueError("normal forms support forcing up to degree 3")
    alphas = tuple(jet[i, 0] / math.factorial(i) for i in range(m + 1))
    beta = jet[0, 1] if n >= 1 else 0.0
    b = jet.base
    return NormalForm(b.x0, b.p0, b.q0, alphas, beta, b.indep)


def build_psi_form(jet: ImplicitJet) -> PsiForm:
    """``y = p0 + sum D(i,j)/(i! j!) (x - x0)^i (y' - q0)^j`` from a jet of ``psi(x, q)``.

    Only the pure terms (``i = 0`` or ``j = 0``) enter, matching
    :func:`build_normal_form`.
    """
    if jet.mode is not Mode.SOLVE_FOR_P:
        raise WrongMode("a psi form needs the jet of p = psi(x, q)")
    m, n = jet.orders
    if m > 1 or n > 2:
        raise ValueError("psi forms support orders up to (1, 2)")
    coeffs = {(0, 0): jet[0, 0]}
    for i in range(1, m + 1):
        coeffs[(i, 0)] = jet.taylor_coefficient(i, 0)
    for j in range(1, n + 1):
        coeffs[(0, j)] = jet.taylor_coefficient(0, j)
    b = jet.base
    return PsiForm(b.x0, b.p0, b.q0, coeffs, b.indep)


# ---------------------------------------------------------------------------
# solvers

def solve_normal_form(ode: NormalForm) -> ClosedFormSolution:
    """Solve ``y' = forcing(x - x0) + beta (y - p0)`` with ``y(x0) = p0``.

    For ``beta != 0`` the particular solution is a polynomial of the forcing's
    degree plus ``c exp(beta x)``; for ``beta = 0`` the forcing is integrated.
    The polynomial-plus-exponential shape cancels badly when ``beta`` is tiny
    (coefficients grow like ``beta^-(k+1)``), so ``|beta| <= BETA_TOL`` is
    treated as zero.
    """
    if len(ode.alphas) > 4:
        raise ValueError("forcing degree above 3 is not supported")
    alphas = list(ode.alphas)
    beta = ode.beta
    m = len(alphas) - 1
    if abs(beta) <= BETA_TOL:
        beta = 0.0
        w = [0.0] + [a / (k + 1) for k, a in enumerate(alphas)]
        amplitude = 0.0
    else:
        # w = y - p0 solves w' - beta w = forcing; back-substitute from the top degree
        w = [0.0] * (m + 1)
        for k in range(m, -1, -1):
            higher = (k + 1) * w[k + 1] if k < m else 0.0
            w[k] = (higher - alphas[k]) / beta
        constant = -w[0]  # fixes w(x0) = 0
        amplitude = constant * math.exp(-beta * ode.x0)
    w[0] += ode.p0
    poly = _shift(w, ode.x0)
    return ClosedFormSolution(
        tuple(float(c) for c in poly), amplitude, beta if amplitude else 0.0, ode.x0, ode.p0, ode.q0, ode.indep
    )


def _ansatz_branches(ode: PsiForm, condition: str) -> list[tuple[float, float, float]]:
    """Real ``(A, B, C)`` with ``y = A + B d + C d^2`` (d = x - x0) solving the psi form.

    Matching the coefficients of 1, d and d^2 with ``s = y' - q0 = b + 2 C d``,
    ``b = B - q0``:

        A = a00 + a01 b + a02 b^2
        B = a10 + 2 C (a01 + 2 a02 b)
        C = 4 a02 C^2
    """
    a00, a10, a01, a02 = ode[0, 0], ode[1, 0], ode[0, 1], ode[0, 2]
    q0, p0 = ode.q0, ode.p0
    scale = max(1.0, abs(a00), abs(a10), abs(a01), abs(a02), abs(q0), abs(p0))
    tol = BRANCH_TOL * scale

    def b_from_condition():
        if condition == "slope":
            return [0.0]
        # value condition: a01 b + a02 b^2 = p0 - a00
        rhs = p0 - a00
        if abs(a02) <= tol:
            if abs(a01) <= tol:
                return [0.0] if abs(rhs) <= tol else []
            return [rhs / a01]
        disc = a01 * a01 + 4.0 * a02 * rhs
        if disc < -tol:
            return []
        r = math.sqrt(max(disc, 0.0))
        roots = {(-a01 + r) / (2 * a02), (-a01 - r) / (2 * a02)}
        return sorted(roots, key=abs)

    candidates = []
    c_values = [0.0] + ([1.0 / (4.0 * a02)] if abs(a02) > tol else [])
    for C in c_values:
        lin = 1.0 - 4.0 * a02 * C  # coefficient of b in the d^1 equation
        rhs = a10 + 2.0 * C * a01 - q0
        if abs(lin) > tol:
            bs = [rhs / lin]
        elif abs(rhs) <= tol:
            bs = b_from_condition()
        else:
            continue
        for b in bs:
            A = a00 + a01 * b + a02 * b * b
            B = b + q0
            ok_slope = abs(b) <= tol
            ok_value = abs(A - p0) <= tol
            if condition == "slope" and not ok_slope:
                continue
            if condition == "value" and not ok_value:
                continue
            residuals = (
                A - (a00 + a01 * b + a02 * b * b),
                B - (a10 + 2.0 * C * (a01 + 2.0 * a02 * b)),
                C - 4.0 * a02 * C * C,
            )
            if all(abs(r) <= tol for r in residuals):
                candidates.append((A, B, C))
    unique = []
    for cand in candidates:
        if not any(all(abs(u - v) <= tol for u, v in zip(cand, seen)) for seen in unique):
            unique.append(cand)
    return unique


def solve_psi_form(ode: PsiForm, condition: str = "slope") -> list[ClosedFormSolution]:
    """Closed-form local solutions of a psi form with ``m <= 1``, ``n <= 2``.

    ``condition`` selects the initial condition imposed besides the equation:
    ``"slope"`` for ``y'(x0) = q0`` or ``"value"`` for ``y(x0) = p0``.

    Returns every real branch.  Non-constant branches matching both
    ``y(x0) = p0`` and ``y'(x0) = q0`` come first (the first one labelled
    ``"primary"``), then other branches, then the constant branch labelled
    ``"trivial"`` when present.  Raises :class:`NoRealBranch` if none exists.
    """
    if condition not in ("slope", "value"):
        raise ValueError("condition must be 'slope' or 'value'")
    if any(i > 1 or j > 2 or (i and j) for i, j in ode.coeffs):
        raise ValueError("psi forms with mixed terms or orders beyond (1, 2) are not supported")
    a01, a02 = ode[0, 1], ode[0, 2]
    common = dict(x0=ode.x0, p0=ode.p0, q0=ode.q0, indep=ode.indep)

    if a02 == 0.0 and a01 == 0.0:
        line = _shift([ode[0, 0], ode[1, 0]], ode.x0)
        return [ClosedFormSolution(tuple(line), **common)]
    if a02 == 0.0:
        # y = a00 + a10 d + a01 (y' - q0)  <=>  y' = q0 - (a10/a01) d + (y - a00)/a01
        normal = NormalForm(ode.x0, ode[0, 0], ode.q0, (ode.q0, -ode[1, 0] / a01), 1.0 / a01, ode.indep)
        sol = solve_normal_form(normal)
        return [ClosedFormSolution(sol.poly, sol.amplitude, sol.rate, **common)]

    branches = _ansatz_branches(ode, condition)
    if not branches:
        raise NoRealBranch(f"the quadratic ansatz has no real solution under the {condition} condition")
    sols = []
    for A, B, C in branches:
        poly = tuple(float(c) for c in _shift([A, B, C], ode.x0))
        sols.append(ClosedFormSolution(poly, **common, label="branch"))

    def rank(sol):
        ev, es = sol.base_errors()
        both = ev <= BRANCH_TOL and es <= BRANCH_TOL
        return (sol.is_constant(), not both)

    sols.sort(key=rank)
    out = []
    for k, sol in enumerate(sols):
        if sol.is_constant():
            label = "trivial"
        elif k == 0 and not rank(sol)[1]:
            label = "primary"
        else:
            label = "branch"
        out.append(ClosedFormSolution(sol.poly, **common, label=label))
    return out


def collapse_time(sol: ClosedFormSolution, horizon: float | None = None) -> float:
    """Smallest ``t > x0`` with ``y(t) = 0`` for a solution that starts positive.

    Polynomials of degree at most two use the quadratic formula; anything else
    is bracketed on a forward scan and refined with Brent's method.
    """
    from scipy.optimize import brentq

    t0 = sol.x0
    if not sol(t0) > 0.0:
        raise NoZeroCrossing(f"y({t0}) = {sol(t0)} is not positive")
    poly = np.trim_zeros(np.asarray(sol.poly, dtype=float), "b")
    if not sol.has_exponential and len(poly) <= 3:
        c = list(poly) + [0.0] * (3 - len(poly))
        c0, c1, c2 = c
        if c2 == 0.0:
            roots = [-c0 / c1] if c1 else []
        else:
            disc = c1 * c1 - 4.0 * c2 * c0
            if disc < 0.0:
                roots = []
            elif c1 == 0.0:
                r = math.sqrt(-c0 / c2)
                roots = [r, -r]
            else:
                # cancellation-free pair
                qv = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
                roots = [qv / c2, c0 / qv]
        later = sorted(r for r in roots if r > t0)
        if not later:
            raise NoZeroCrossing("the solution never reaches zero after the base point")
        return float(later[0])

    span = horizon or max(1.0, abs(t0))
    limit = 1e6 * span
    lo = t0
    while span <= limit:
        grid = np.linspace(lo, t0 + span, 2001)
        vals = sol(grid)
        idx = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
        if idx.size:
            k = int(idx[0])
            if vals[k + 1] == 0.0:
                return float(grid[k + 1])
            return float(brentq(sol, grid[k], grid[k + 1], xtol=1e-15, rtol=1e-15))
        lo = t0 + span
        span *= 2.0
    raise NoZeroCrossing("no zero crossing found within the search horizon")
