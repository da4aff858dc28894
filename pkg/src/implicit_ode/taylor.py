"""Truncated multivariate Taylor expansion by repeated symbolic differentiation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

from .expr import Expr, Num, Var, differentiate, evaluate, simplify


@dataclass(frozen=True)
class TruncatedPoly:
    """Polynomial ``sum c[idx] * prod (v_k - center_k)^idx[k]`` with bounded exponents.

    Missing entries of ``coefficients`` are zero.
    """

    centers: tuple[tuple[str, float], ...]
    orders: tuple[int, ...]
    coefficients: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.centers) != len(self.orders):
            raise ValueError("one order per expansion variable is required")
        for idx in self.coefficients:
            if len(idx) != len(self.orders) or any(
                not 0 <= i <= m for i, m in zip(idx, self.orders)
            ):
                raise ValueError(f"exponent {idx} outside bounds {self.orders}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.centers)

    def __getitem__(self, idx) -> float:
        if isinstance(idx, int):
            idx = (idx,)
        return self.coefficients.get(tuple(idx), 0.0)

    def __call__(self, **values: float) -> float:
        total = 0.0
        for idx, c in self.coefficients.items():
            term = c
            for (name, center), k in zip(self.centers, idx):
                term *= (values[name] - center) ** k
            total += term
        return total

    def to_expr(self) -> Expr:
        out: Expr = Num(0)
        for idx in sorted(self.coefficients):
            term: Expr = Num(self.coefficients[idx])
            for (name, center), k in zip(self.centers, idx):
                if k:
                    term = term * (Var(name) - center) ** k
            out = out + term
        return simplify(out)


def taylor_coefficients(
    e: Expr,
    centers: Mapping[str, float],
    orders,
    bindings: Mapping[str, float] | None = None,
) -> TruncatedPoly:
    """Expand ``e`` about ``centers`` up to the given per-variable orders.

    Coefficient ``(i, j, ...)`` is the mixed partial ``d^i d^j ... e`` at the
    center divided by ``i! j! ...``.  Variables of ``e`` that are not
    expanded must be supplied through ``bindings``.
    """
    names = tuple(centers)
    if isinstance(orders, int):
        orders = (orders,)
    orders = tuple(int(m) for m in orders)
    point = dict(bindings or {})
    point.update(centers)

    partials: dict[tuple[int, ...], Expr] = {(0,) * len(names): simplify(e)}
    coefficients = {}
    for idx in itertools.product(*(range(m + 1) for m in orders)):
        if idx not in partials:
            # derive from a neighbour with one fewer derivative in the last nonzero slot
            k = max(i for i, n in enumerate(idx) if n)
            prev = idx[:k] + (idx[k] - 1,) + idx[k + 1:]
            partials[idx] = differentiate(partials[prev], names[k])
        value = evaluate(partials[idx], point)
        scale = math.prod(math.factorial(i) for i in idx)
        if value != 0.0:
            coefficients[idx] = value / scale
    return TruncatedPoly(tuple(centers.items()), orders, coefficients)
