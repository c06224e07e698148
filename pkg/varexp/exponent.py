# varexp/exponent.py
"""
Variable exponent p(x) sampled at cell midpoints.

p_plus = inf is a property of the continuum function only: on a grid it shows
up as p_max_sampled growing under refinement. Overflow in the kernels is
handled by saturation (see modular.py), never here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from varexp.exceptions import ExponentError, GridError
from varexp.expr import compile_expr
from varexp.grid import Grid

logger = logging.getLogger(__name__)

LOG_MAX = math.log(np.finfo(float).max)

# preset name -> expression on (0,1)-type domains
PRESETS = {
    "inv_x": "1/x",
    "linear": "2 + x",
    "blowup": "2 + 1/(1 - 0.99*x)",
    "const2": "2",
    "const3": "3",
    "const4": "4",
}

Evaluable = Union[float, int, str, Callable[..., np.ndarray]]


def _sample(grid: Grid, fn: Evaluable) -> np.ndarray:
    if isinstance(fn, str):
        fn = compile_expr(PRESETS.get(fn, fn))
    if callable(fn):
        with np.errstate(all="ignore"):
            values = np.asarray(fn(*grid.midpoints), dtype=float)
    else:
        values = np.asarray(float(fn))
    return np.array(np.broadcast_to(values, grid.cell_shape), dtype=float)


@dataclass(frozen=True, eq=False)
class ExponentField:
    grid: Grid
    values: np.ndarray
    p_minus: float = field(init=False)
    p_max_sampled: float = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.cell_shape:
            raise GridError(f"expected {self.grid.cell_shape} cell samples, got {values.shape}")
        bad = ~np.isfinite(values) | (values <= 1.0)
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            mid = tuple(float(m[idx]) for m in self.grid.midpoints)
            raise ExponentError(f"exponent must be finite and > 1; got {values[idx]} at midpoint {mid}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "p_minus", float(values.min()))
        object.__setattr__(self, "p_max_sampled", float(values.max()))

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_max_sampled


def make_exponent(grid: Grid, p: Evaluable) -> ExponentField:
    """
    p may be a number, a preset name, an expression string, or a callable
    taking midpoint coordinate arrays (x[, y]).
    """
    return ExponentField(grid, _sample(grid, p))


def admissible_for_dirichlet(p: ExponentField, n: int = None) -> bool:
    n = p.grid.dim if n is None else n
    ok = p.p_minus > n
    if not ok:
        logger.warning("[exponent] p_minus=%.6g <= n=%d; outside the Dirichlet theory", p.p_minus, n)
    return ok


# =========================
# Non-negative cell weight (q of the weighted functional)
# =========================
@dataclass(frozen=True, eq=False)
class WeightField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.cell_shape:
            raise GridError(f"expected {self.grid.cell_shape} cell samples, got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ExponentError("weight q must be finite and >= 0 at every cell midpoint")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def make_weight(grid: Grid, q: Evaluable) -> WeightField:
    return WeightField(grid, _sample(grid, q))


def exp_integrability_check(q: ExponentField) -> float:
    """Midpoint value of the integral of e^q / q; inf once any cell overflows."""
    values = q.values
    if np.any(values > LOG_MAX):
        return math.inf
    with np.errstate(over="ignore"):
        terms = np.exp(values) / values
        total = q.grid.integrate(terms)
    return total if math.isfinite(total) else math.inf
