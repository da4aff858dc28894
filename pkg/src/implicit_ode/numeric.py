"""Numerical references: RK4 integration, bubble collapse, residual scans, jets by continuation."""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import DomainViolation, EvaluationError, IntervalMismatch, RootLost, StepTooLarge
from .expr import Expr, differentiate, lambdify
from .jet import BasePoint, ImplicitJet, independent_variable

CSV_FORMAT = "%.17g"


@dataclass(frozen=True)
class Trajectory:
    """Samples ``(x, y, y')`` of a numerical solution, ordered by increasing ``x``."""

    x: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    step: float
    integrator: str = "rk4"
    complete: bool = True
    message: str = ""

    @property
    def span(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.x, self.y, self.dy, extrapolate=False)

    def __call__(self, x):
        if len(self.x) == 1:
            return np.full(np.shape(x), self.y[0]) if np.ndim(x) else float(self.y[0])
        out = self._spline()(x)
        return out if np.ndim(out) else float(out)

    def derivative(self, x):
        if len(self.x) == 1:
            return np.full(np.shape(x), self.dy[0]) if np.ndim(x) else float(self.dy[0])
        out = self._spline().derivative()(x)
        return out if np.ndim(out) else float(out)


def _rk4_leg(func, x0: float, y0: float, length: float, step: float):
    """Fixed-step RK4 from ``x0`` over signed ``length``; stops early on a domain error."""
    n = max(int(math.ceil(abs(length) / step - 1e-9)), 0)
    xs, ys, dys = [x0], [y0], []
    try:
        dys.append(func(x0, y0))
    except EvaluationError as exc:
        return xs, ys, [math.nan], False, str(exc)
    if n == 0:
        return xs, ys, dys, True, ""
    h = length / n
    y = y0
    for k in range(n):
        x = x0 + k * h
        try:
            k1 = dys[-1]
            k2 = func(x + 0.5 * h, y + 0.5 * h * k1)
            k3 = func(x + 0.5 * h, y + 0.5 * h * k2)
            k4 = func(x + h, y + h * k3)
            y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            xn = x0 + (k + 1) * h
            slope = func(xn, y)
        except EvaluationError as exc:
            return xs, ys, dys, False, f"stopped at x = {x!r}: {exc}"
        xs.append(xn)
        ys.append(y)
        dys.append(slope)
    return xs, ys, dys, True, ""


def integrate_explicit(
    f: Expr, x0: float, y0: float, step: float, span: Sequence[float], indep: str | None = None
) -> Trajectory:
    """Classical RK4 for ``y' = f(x, y)`` (``p`` stands for ``y`` in ``f``).

    ``span = (a, b)`` must contain ``x0``; the solution is integrated
    backward to ``a`` and forward to ``b`` with a uniform step no larger than
    ``step``.  A domain error stops the affected leg and the returned
    trajectory is flagged incomplete.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    a, b = (float(v) for v in span)
    if not a <= x0 <= b:
        raise ValueError(f"x0 = {x0} is outside the span [{a}, {b}]")
    X = independent_variable(f, indep)
    compiled = lambdify(f, (X, "p"))
    fx, fy, fd, fok, fmsg = _rk4_leg(compiled, x0, y0, b - x0, step)
    bx, by, bd, bok, bmsg = _rk4_leg(compiled, x0, y0, a - x0, step)
    x = np.array(bx[:0:-1] + fx)
    y = np.array(by[:0:-1] + fy)
    dy = np.array(bd[:0:-1] + fd)
    message = "; ".join(m for m in (bmsg, fmsg) if m)
    return Trajectory(x, y, dy, step, "rk4", fok and bok, message)


# ---------------------------------------------------------------------------
# bubble collapse

@dataclass(frozen=True)
class BubbleRun:
    trajectory: Trajectory
    collapse_time: float
    max_drift: float  # max |first integral| along the run
    drift_budget: float
    rejected_steps: int


def bubble_first_integral(y, v, R0: float, p_f: float = 1.0, rho: float = 1.0):
    """``y^3 v^2 - (2/3)(p_f/rho)(R0^3 - y^3)``; zero along exact solutions."""
    return y**3 * v * v - (2.0 / 3.0) * (p_f / rho) * (R0**3 - y**3)


def integrate_bubble(
    R0: float,
    p_f: float = 1.0,
    rho: float = 1.0,
    step: float | None = None,
    floor: float | None = None,
    drift_tol: float = 1e-6,
    max_halvings: int = 60,
) -> BubbleRun:
    """Integrate ``(2/3) y y'' + y'^2 = -(2/3) p_f / rho`` from rest at radius ``R0``.

    The system ``y' = v``, ``v' = -(p_f/rho + 1.5 v^2) / y`` is advanced with
    RK4 at the fixed ``step`` (default ``1e-4 * R0 * sqrt(rho/p_f)``) until
    the radius falls below ``floor`` (default ``1e-3 * R0``).  The first
    integral :func:`bubble_first_integral` is monitored: a step whose
    increment exceeds its share of ``drift_tol * R0^3 * p_f/rho`` is rejected
    and retried at half length (the step grows back afterwards), which is how
    the run follows the stiffening near collapse.  The collapse time is the
    value at ``y = 0`` of the quadratic through the last three ``(y, t)`` nodes.
    """
    if not (R0 > 0 and p_f > 0 and rho > 0):
        raise ValueError("R0, p_f and rho must be positive")
    k = p_f / rho
    T = R0 / math.sqrt(k)
    h0 = 1e-4 * T if step is None else float(step)
    floor = 1e-3 * R0 if floor is None else float(floor)
    budget = drift_tol * R0**3 * k

    def rhs(y, v):
        return v, -(k + 1.5 * v * v) / y

    t, y, v = 0.0, float(R0), 0.0
    e = bubble_first_integral(y, v, R0, p_f, rho)
    ts, ys, vs = [t], [y], [v]
    h, halvings, rejected, worst = h0, 0, 0, abs(e)
    while y > floor:
        while True:
            k1 = rhs(y, v)
            k2 = rhs(y + 0.5 * h * k1[0], v + 0.5 * h * k1[1])
            k3 = rhs(y + 0.5 * h * k2[0], v + 0.5 * h * k2[1])
            k4 = rhs(y + h * k3[0], v + h * k3[1])
            yn = y + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            vn = v + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            if yn > 0.0:
                en = bubble_first_integral(yn, vn, R0, p_f, rho)
                # time-proportional share plus a per-step rounding allowance
                if abs(en - e) <= budget * (h / T + 1e-6):
                    break
            h *= 0.5
            halvings += 1
            rejected += 1
            if halvings > max_halvings:
                raise StepTooLarge(
                    f"energy monitor rejected the step {max_halvings} times at t = {t:.6g}, y = {y:.3e}"
                )
        t, y, v, e = t + h, yn, vn, en
        worst = max(worst, abs(e))
        if worst > budget:
            raise StepTooLarge(f"first-integral drift {worst:.3e} exceeds {budget:.3e} at t = {t:.6g}")
        ts.append(t)
        ys.append(y)
        vs.append(v)
        if h < h0:
            h = min(2.0 * h, h0)
            halvings = max(halvings - 1, 0)

    yy, tt = np.array(ys[-3:]), np.array(ts[-3:])
    collapse = float(np.polyval(np.polyfit(yy, tt, len(yy) - 1), 0.0))
    traj = Trajectory(np.array(ts), np.array(ys), np.array(vs), h0, "rk4-energy-monitored")
    return BubbleRun(traj, collapse, worst, budget, rejected)


def bubble_initial_acceleration(R0: float, p_f: float = 1.0, rho: float = 1.0) -> float:
    return -p_f / (rho * R0)


# ---------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class ValidationReport:
    """Per-sample table plus error aggregates over a uniform grid.

    ``columns`` is ordered; the first column is the abscissa and the last is
    the error column the aggregates summarise.  Samples where evaluation
    failed are listed in ``excluded`` and hold NaN.
    """

    interval: tuple[float, float]
    columns: Mapping[str, np.ndarray]
    max_abs_error: float
    mean_abs_error: float
    max_residual: float | None = None
    excluded: tuple[int, ...] = ()

    @property
    def samples(self) -> int:
        return len(next(iter(self.columns.values())))

    def to_csv(self, target=None) -> str:
        """Write the table as CSV (17 significant digits, LF endings); returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(self.columns))
        for row in zip(*self.columns.values()):
            writer.writerow([CSV_FORMAT % v for v in row])
        text = buf.getvalue()
        if target is not None:
            if hasattr(target, "write"):
                target.write(text)
            else:
                with open(target, "w", newline="", encoding="ascii") as fh:
                    fh.write(text)
        return text


def _grid(interval, samples: int) -> np.ndarray:
    a, b = (float(v) for v in interval)
    if b < a:
        raise ValueError("interval must be ordered")
    if a == b:
        return np.array([a])
    if samples < 2:
        raise ValueError("need at least two samples on a non-degenerate interval")
    return np.linspace(a, b, samples)


def residual_profile(
    F: Expr, sol, interval, samples: int = 101, indep: str | None = None
) -> ValidationReport:
    """``|F(x, u(x), u'(x))|`` on a uniform grid for a candidate solution ``u``.

    ``sol`` needs ``sol(x)`` and ``sol.derivative(x)``.  Samples where F
    cannot be evaluated are excluded from the aggregates and reported.
    """
    X = independent_variable(F, indep)
    compiled = lambdify(F, (X, "p", "q"))
    xs = _grid(interval, samples)
    values = np.asarray(sol(xs), dtype=float) * np.ones_like(xs)
    slopes = np.asarray(sol.derivative(xs), dtype=float) * np.ones_like(xs)
    residuals = np.empty_like(xs)
    excluded = []
    for i, (x, u, du) in enumerate(zip(xs, values, slopes)):
        try:
            residuals[i] = abs(compiled(x, u, du))
        except EvaluationError:
            residuals[i] = math.nan
            excluded.append(i)
    good = residuals[np.isfinite(residuals)]
    if good.size == 0:
        raise DomainViolation("F could not be evaluated at any sample")
    return ValidationReport(
        (float(xs[0]), float(xs[-1])),
        {X: xs, "value": values, "slope": slopes, "residual": residuals},
        float(good.max()),
        float(good.mean()),
        float(good.max()),
        tuple(excluded),
    )


def _span(obj) -> tuple[float, float]:
    span = getattr(obj, "span", None)
    return span if span is not None else (-math.inf, math.inf)


def compare_trajectories(
    a,
    b,
    interval,
    samples: int = 201,
    names: Sequence[str] = ("x", "value_a", "value_b", "abs_error"),
) -> ValidationReport:
    """Pointwise comparison of two solutions (trajectories, closed forms or callables).

    Trajectories are evaluated through cubic Hermite interpolation of their
    nodes.  Raises :class:`IntervalMismatch` if the interval leaves the range
    covered by either trajectory.
    """
    lo, hi = (float(v) for v in interval)
    for obj in (a, b):
        s0, s1 = _span(obj)
        slack = 1e-12 * max(1.0, abs(s0), abs(s1))
        if lo < s0 - slack or hi > s1 + slack:
            raise IntervalMismatch(f"interval [{lo}, {hi}] is not inside [{s0}, {s1}]")
    xs = _grid((lo, hi), samples)
    if isinstance(a, Trajectory) or isinstance(b, Trajectory):
        xs = np.clip(xs, max(_span(a)[0], _span(b)[0]), min(_span(a)[1], _span(b)[1]))
    va = np.asarray(a(xs), dtype=float) * np.ones_like(xs)
    vb = np.asarray(b(xs), dtype=float) * np.ones_like(xs)
    err = np.abs(va - vb)
    ax, na, nb, ne = names
    return ValidationReport(
        (lo, hi), {ax: xs, na: va, nb: vb, ne: err}, float(err.max()), float(err.mean())
    )


# ---------------------------------------------------------------------------
# finite-difference jets

@functools.lru_cache(maxsize=None)
def central_weights(k: int) -> tuple[tuple[int, float], ...]:
    """Fourth-order accurate central-difference weights for the k-th derivative (unit spacing)."""
    if k == 0:
        return ((0, 1.0),)
    n = 2 * ((k + 1) // 2) - 1 + 4
    offsets = np.arange(n) - (n - 1) // 2
    vander = np.vander(offsets, n, increasing=True).T.astype(float)
    rhs = np.zeros(n)
    rhs[k] = math.factorial(k)
    weights = np.linalg.solve(vander, rhs)
    return tuple((int(o), float(w)) for o, w in zip(offsets, weights) if abs(w) > 1e-12)


def _continue_root(f, df, seed: float, radius: float) -> float:
    s = seed
    for _ in range(60):
        slope = df(s)
        if slope == 0.0 or not math.isfinite(slope):
            break
        step = f(s) / slope
        s -= step
        if not math.isfinite(s) or abs(s - seed) > radius:
            break
        if abs(step) <= 4e-16 * max(1.0, abs(s)):
            return s
    # Newton stalled: bracket outward from the seed
    width = 1e-3 * max(1.0, abs(seed))
    while width <= radius:
        lo, hi = seed - width, seed + width
        try:
            flo, fhi = f(lo), f(hi)
        except EvaluationError:
            break
        if flo * fhi <= 0.0:
            return brentq(f, lo, hi, xtol=1e-15, rtol=1e-15)
        width *= 2.0
    raise RootLost(f"implicit function could not be continued from {seed!r}")


def finite_difference_jet(F: Expr, base: BasePoint, orders=(1, 1), h: float = 1e-3) -> ImplicitJet:
    """Jet of the implicit function by numerical continuation and central differences.

    At each stencil node the solved coordinate is recovered by a 1-D root
    solve seeded at its base value; mixed derivatives use tensor products of
    fourth-order central stencils.
    """
    if not 0.0 < h <= 1e-2:
        raise ValueError("h must lie in (0, 1e-2]")
    m, n = (int(k) for k in orders)
    if max(m, n) > 4:
        raise ValueError("finite-difference stencils support derivative orders up to 4")
    X, S, R = base.indep, base.mode.solved, base.mode.free
    compiled = lambdify(F, (X, R, S))
    dcompiled = lambdify(differentiate(F, S), (X, R, S))
    seed = base.solved_value
    radius = 0.5 * (1.0 + abs(seed))
    cache: dict[tuple[int, int], float] = {}

    def implicit(a: int, b: int) -> float:
        if (a, b) not in cache:
            x, r = base.x0 + a * h, base.free_value + b * h
            try:
                cache[(a, b)] = _continue_root(lambda s: compiled(x, r, s), lambda s: dcompiled(x, r, s), seed, radius)
            except EvaluationError as exc:
                raise RootLost(f"F not evaluable near node ({a}, {b}): {exc}") from None
        return cache[(a, b)]

    table = {}
    for i in range(m + 1):
        for j in range(n + 1):
            total = 0.0
            for a, wa in central_weights(i):
                for b, wb in central_weights(j):
                    total += wa * wb * implicit(a, b)
            table[(i, j)] = total / h ** (i + j)
    table[(0, 0)] = implicit(0, 0)
    return ImplicitJet(base, (m, n), table)


def expr_curve(u: Expr, indep: str = "x") -> "ExprCurve":
    return ExprCurve(u, indep)


@dataclass(frozen=True)
class ExprCurve:
    """A candidate solution given as an expression in the independent variable."""

    expr: Expr
    indep: str = "x"
    _fns: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        extra = self.expr.variables - {self.indep}
        if extra:
            raise ValueError(f"solution may only use {self.indep!r}, found {sorted(extra)}")
        fns = (lambdify(self.expr, (self.indep,)), lambdify(differentiate(self.expr, self.indep), (self.indep,)))
        object.__setattr__(self, "_fns", fns)

    def _apply(self, fn: Callable[[float], float], x):
        if np.ndim(x):
            return np.array([fn(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        return fn(float(x))

    def __call__(self, x):
        return self._apply(self._fns[0], x)

    def derivative(self, x):
        return self._apply(self._fns[1], x)
