# varexp/modular.py
"""
Modulars of variable-exponent spaces and their Luxemburg norms.

    RHO_P     sum_c |u(c)|^p / p * |c|
    ETA_P     sum_c |u(c)|^p * |c|
    RHO_GRAD  same as RHO_P on |grad u|
    ETA_GRAD  same as ETA_P on |grad u|
    RHO_1P    RHO_P + RHO_GRAD

|g|^p is evaluated as exp(p log|g|). A cell with p log|g| above the largest
finite exponent saturates, and a saturated cell makes the whole modular INF.
"""

from __future__ import annotations

import enum
import logging
import math
from typing import Iterable, List, Optional, Union

import numpy as np

from varexp.exceptions import GridError, SaturatedEnergyError, ZeroModularError
from varexp.exponent import LOG_MAX, ExponentField
from varexp.grid import Grid, GridFunction

logger = logging.getLogger(__name__)


class ExtendedReal(float):
    """A float in [0, inf]; never NaN, never negative."""

    def __new__(cls, value=0.0):
        v = float(value)
        if math.isnan(v) or v < 0:
            raise ValueError(f"ExtendedReal must be >= 0 or INF, got {v}")
        return super().__new__(cls, v)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self)

    def __repr__(self):
        return "INF" if not self.is_finite else f"ExtendedReal({float(self)!r})"

    def to_json(self) -> Union[float, str]:
        return float(self) if self.is_finite else "INF"


INF = ExtendedReal(math.inf)


class ModularKind(str, enum.Enum):
    RHO_P = "RHO_P"
    ETA_P = "ETA_P"
    RHO_GRAD = "RHO_GRAD"
    RHO_1P = "RHO_1P"
    ETA_GRAD = "ETA_GRAD"

    @property
    def weighted(self) -> bool:
        return self in (ModularKind.RHO_P, ModularKind.RHO_GRAD, ModularKind.RHO_1P)

    @property
    def uses_values(self) -> bool:
        return self in (ModularKind.RHO_P, ModularKind.ETA_P, ModularKind.RHO_1P)

    @property
    def uses_gradient(self) -> bool:
        return self in (ModularKind.RHO_GRAD, ModularKind.ETA_GRAD, ModularKind.RHO_1P)


# =========================
# Kernel
# =========================
def _exponent_values(grid: Grid, p) -> np.ndarray:
    if isinstance(p, ExponentField):
        if not p.grid.same_as(grid):
            raise GridError("exponent lives on a different grid")
        return p.values
    return np.broadcast_to(np.asarray(p, dtype=float), grid.cell_shape)


def power_terms(mags: np.ndarray, p: np.ndarray):
    """(|g|^p per cell, saturated mask); saturated cells carry 0 in the terms."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        expo = p * np.log(mags)  # -inf where mags == 0
        saturated = expo > LOG_MAX
        terms = np.exp(np.where(saturated, -np.inf, expo))
    return terms, saturated


def _power_sum(grid: Grid, mags: np.ndarray, p: np.ndarray, weighted: bool) -> np.ndarray:
    """sum_c |g_c|^p_c (/p_c) |c| over the trailing cell axes; INF where saturated."""
    cell_axes = tuple(range(mags.ndim - grid.dim, mags.ndim))
    terms, saturated = power_terms(mags, p)
    if weighted:
        terms = terms / p
    with np.errstate(over="ignore", invalid="ignore"):
        total = np.asarray(grid.integrate(terms), dtype=float)
    return np.where(np.any(saturated, axis=cell_axes) | ~np.isfinite(total), math.inf, total)


def cell_modular(grid: Grid, mags: np.ndarray, p, weighted: bool = True) -> np.ndarray:
    """
    Modular of per-cell magnitudes (leading batch axes allowed).

    Used directly for functions that are defined piecewise on cells.
    """
    mags = np.abs(np.asarray(mags, dtype=float))
    if mags.shape[mags.ndim - grid.dim :] != grid.cell_shape:
        raise GridError(f"expected trailing cell shape {grid.cell_shape}, got {mags.shape}")
    out = _power_sum(grid, mags, _exponent_values(grid, p), weighted)
    return float(out) if out.ndim == 0 else out


class _Magnitudes:
    """|u| and |grad u| per cell, computed once and rescaled by 1/lambda."""

    def __init__(self, kind: ModularKind, grid: Grid, values: np.ndarray):
        self.kind = kind
        self.grid = grid
        self.vals = np.abs(grid.cell_average(values)) if kind.uses_values else None
        self.grads = np.linalg.norm(grid.cell_gradient(values), axis=-1) if kind.uses_gradient else None

    def rho(self, p: np.ndarray, scale: float = 1.0) -> np.ndarray:
        total = 0.0
        if self.vals is not None:
            total = total + _power_sum(self.grid, self.vals * scale, p, self.kind.weighted)
        if self.grads is not None:
            total = total + _power_sum(self.grid, self.grads * scale, p, self.kind.weighted)
        return np.asarray(total, dtype=float)

    def all_zero(self) -> bool:
        return all(m is None or not np.any(m) for m in (self.vals, self.grads))


# =========================
# Public operations
# =========================
def modular_eval(kind: ModularKind, u: GridFunction, p: ExponentField) -> ExtendedReal:
    kind = ModularKind(kind)
    p.grid.require_same(u.grid)
    return ExtendedReal(_Magnitudes(kind, u.grid, u.values).rho(p.values))


def modular_eval_batch(kind: ModularKind, values: np.ndarray, p: ExponentField) -> np.ndarray:
    """values: (k, *grid.shape) stack of node functions -> k modular values (INF allowed)."""
    kind = ModularKind(kind)
    values = np.asarray(values, dtype=float)
    if values.shape[1:] != p.grid.shape:
        raise GridError(f"expected a stack of {p.grid.shape} node arrays, got {values.shape}")
    return _Magnitudes(kind, p.grid, values).rho(p.values)


def luxemburg_norm(kind: ModularKind, u: GridFunction, p: ExponentField, tol: float = 1e-12) -> float:
    """
    inf{lam > 0 : rho(u/lam) <= 1}, returned as the upper end of the final
    bisection bracket so that rho(u/result) <= 1 holds.
    """
    kind = ModularKind(kind)
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    p.grid.require_same(u.grid)
    mags = _Magnitudes(kind, u.grid, u.values)
    if mags.all_zero():
        return 0.0

    def inside(lam: float) -> bool:
        return float(mags.rho(p.values, 1.0 / lam)) <= 1.0

    # --- 1) bracket [lo, hi] with rho(u/lo) > 1 >= rho(u/hi) ---
    if inside(1.0):
        lo, hi = 0.5, 1.0
        while inside(lo):
            lo, hi = lo / 2.0, lo
    else:
        lo, hi = 1.0, 2.0
        while not inside(hi):
            lo, hi = hi, hi * 2.0

    # --- 2) bisect to relative width tol ---
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return hi


def delta2_ratio(u: GridFunction, p: ExponentField, kind: ModularKind = ModularKind.RHO_P) -> ExtendedReal:
    """rho(2u) / rho(u); bounded by 2^p_max for bounded exponents."""
    base = modular_eval(kind, u, p)
    if base == 0:
        raise ZeroModularError("delta2 ratio needs rho(u) > 0")
    if not base.is_finite:
        raise SaturatedEnergyError("delta2 ratio needs rho(u) < INF")
    doubled = modular_eval(kind, 2.0 * u, p)
    if not doubled.is_finite:
        return INF
    return ExtendedReal(doubled / base)


def modular_distance(kind: ModularKind, u: GridFunction, v: GridFunction, p: ExponentField) -> ExtendedReal:
    return modular_eval(kind, u - v, p)


def distance_sequence(
    kind: ModularKind,
    iterates: Iterable[GridFunction],
    limit: Optional[GridFunction],
    p: ExponentField,
) -> List[ExtendedReal]:
    """
    rho(x_j - x) for each iterate; with limit=None, rho(x_{j+1} - x_j)
    between successive iterates (modular-Cauchy profile).
    """
    iterates = list(iterates)
    if limit is not None:
        return [modular_distance(kind, it, limit, p) for it in iterates]
    return [modular_distance(kind, b, a, p) for a, b in zip(iterates, iterates[1:])]
