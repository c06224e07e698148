# varexp/energy.py
"""
Dirichlet-type functionals on the interior degrees of freedom.

With d = w - phi (w vanishes on the boundary), every functional is

    E(w) = sum_c |c| * ( a_c |grad d|_c^p + b_c |avg d|_c^p )

    F_FULL        a = 1/p   b = 1/p
    F_GRAD        a = 1/p   b = 0
    J_WEIGHTED    a = 1/p   b = q/p
    G_UNWEIGHTED  a = 1     b = 0

The gradient is the exact derivative of this finite sum through the linear
cell-gradient and cell-average stencils, restricted to interior nodes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from varexp.exceptions import GridError, ProblemDataError, SaturatedEnergyError
from varexp.exponent import ExponentField, WeightField
from varexp.grid import Grid, GridFunction
from varexp.modular import INF, ExtendedReal, ModularKind, modular_eval, power_terms


class EnergyKind(str, enum.Enum):
    F_FULL = "F_FULL"
    F_GRAD = "F_GRAD"
    J_WEIGHTED = "J_WEIGHTED"
    G_UNWEIGHTED = "G_UNWEIGHTED"


@dataclass(frozen=True, eq=False)
class ProblemData:
    grid: Grid
    p: ExponentField
    phi: GridFunction
    q: Optional[WeightField] = None

    def __post_init__(self):
        self.p.grid.require_same(self.grid)
        self.phi.grid.require_same(self.grid)
        if self.q is not None:
            self.q.grid.require_same(self.grid)
        if not modular_eval(ModularKind.RHO_1P, self.phi, self.p).is_finite:
            raise ProblemDataError("rho_{1,p}(phi) is infinite on this grid; the boundary datum is not admissible")


ArrayLike = Union[GridFunction, np.ndarray]


def _values(x: ArrayLike) -> np.ndarray:
    return x.values if isinstance(x, GridFunction) else np.asarray(x, dtype=float)


class Functional:
    """One EnergyKind bound to ProblemData; works on raw node arrays."""

    def __init__(self, kind: EnergyKind, data: ProblemData):
        self.kind = EnergyKind(kind)
        self.data = data
        grid = data.grid
        p = data.p.values
        vol = grid.cell_volumes
        self.grid = grid
        self.p = p
        self.phi = data.phi.values
        self.interior = grid.interior_mask

        # per-cell coefficients of |grad d|^p and |avg d|^p, cell volume folded in
        if self.kind == EnergyKind.G_UNWEIGHTED:
            self.a = vol.copy()
        else:
            self.a = vol / p
        if self.kind == EnergyKind.F_FULL:
            self.b = vol / p
        elif self.kind == EnergyKind.J_WEIGHTED:
            if data.q is None:
                raise ProblemDataError("J_WEIGHTED needs a weight q")
            self.b = vol * data.q.values / p
        else:
            self.b = None

    # ---- helpers ----
    def check_feasible(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != self.grid.shape:
            raise GridError(f"expected {self.grid.shape} node values, got {w.shape}")
        if np.any(w[~self.interior] != 0.0):
            raise GridError("w must vanish on boundary nodes")
        return w

    def _parts(self, w: np.ndarray):
        d = w - self.phi
        g = self.grid.cell_gradient(d)
        m = self.grid.cell_average(d) if self.b is not None else None
        return g, m

    # ---- value ----
    def value(self, w: np.ndarray) -> float:
        g, m = self._parts(w)
        terms, sat = power_terms(np.linalg.norm(g, axis=-1), self.p)
        if np.any(sat):
            return math.inf
        total = self.a * terms
        if m is not None:
            mterms, msat = power_terms(np.abs(m), self.p)
            if np.any(msat):
                return math.inf
            total = total + self.b * mterms
        with np.errstate(over="ignore", invalid="ignore"):
            out = float(np.sum(total))
        return out if math.isfinite(out) else math.inf

    # ---- gradient ----
    def _flux(self, vec: np.ndarray) -> np.ndarray:
        """|v|^(p-2) v with the continuous value 0 at v = 0 (p > 1)."""
        r = np.linalg.norm(vec, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            scale = np.where(r > 0, np.exp((self.p - 2.0) * np.log(r)), 0.0)
        return scale[..., None] * vec

    def gradient(self, w: np.ndarray) -> np.ndarray:
        """dE/dw on every node, zeroed on the boundary."""
        g, m = self._parts(w)
        # d/dg [a |g|^p] = a p |g|^(p-2) g
        coef = self.a * self.p
        out = self.grid.cell_gradient_adjoint(coef[..., None] * self._flux(g))
        if m is not None:
            mflux = self._flux(m[..., None])[..., 0]
            out = out + self.grid.cell_average_adjoint(self.b * self.p * mflux)
        out[~self.interior] = 0.0
        if not np.all(np.isfinite(out)):
            raise SaturatedEnergyError("gradient overflow; energy is not finite here")
        return out

    # ---- stable differences ----
    def _term_change(self, coef: np.ndarray, base: np.ndarray, step: np.ndarray) -> np.ndarray:
        """coef * (|base + step|^p - |base|^p) per cell without cancellation."""
        ra = np.linalg.norm(base, axis=-1)
        rb = np.linalg.norm(base + step, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # rb - ra computed from the step, not by subtracting two norms
            dr = (2.0 * np.sum(base * step, axis=-1) + np.sum(step * step, axis=-1)) / (ra + rb)
            x = self.p * np.log1p(dr / ra)
            near = np.exp(self.p * np.log(ra)) * np.expm1(x)
            direct = np.exp(self.p * np.log(rb)) - np.exp(self.p * np.log(ra))
        diff = np.where((ra > 0) & (np.abs(x) <= 1.0), near, direct)
        return coef * diff

    def change(self, w: np.ndarray, h: np.ndarray, t: float) -> float:
        """E(w + t h) - E(w); +inf when the new point saturates."""
        g, m = self._parts(w)
        dg = t * self.grid.cell_gradient(h)
        parts = [self._term_change(self.a, g, dg)]
        if m is not None:
            dm = t * self.grid.cell_average(h)
            parts.append(self._term_change(self.b, m[..., None], dm[..., None]))
        cells = np.concatenate([np.ravel(x) for x in parts])
        if np.any(np.isnan(cells)) or np.any(cells == math.inf):
            return math.inf
        try:
            return math.fsum(cells)
        except OverflowError:
            return math.inf


# =========================
# Public operations
# =========================
def energy(kind: EnergyKind, data: ProblemData, w: ArrayLike) -> ExtendedReal:
    f = Functional(kind, data)
    value = f.value(f.check_feasible(_values(w)))
    return ExtendedReal(value) if math.isfinite(value) else INF


def gateaux_gradient(kind: EnergyKind, data: ProblemData, w: ArrayLike) -> GridFunction:
    """Exact derivative w.r.t. each interior node value; boundary entries are 0."""
    f = Functional(kind, data)
    w = f.check_feasible(_values(w))
    if not math.isfinite(f.value(w)):
        raise SaturatedEnergyError("energy is +INF at w")
    return GridFunction(data.grid, f.gradient(w))


def directional_derivative(kind: EnergyKind, data: ProblemData, w: ArrayLike, h: ArrayLike) -> float:
    f = Functional(kind, data)
    w = f.check_feasible(_values(w))
    h = f.check_feasible(_values(h))
    if not math.isfinite(f.value(w)):
        raise SaturatedEnergyError("energy is +INF at w")
    g = f.gradient(w)
    return math.fsum(np.ravel(g * h))


def energy_change(kind: EnergyKind, data: ProblemData, w: ArrayLike, h: ArrayLike, t: float) -> float:
    f = Functional(kind, data)
    return f.change(f.check_feasible(_values(w)), f.check_feasible(_values(h)), float(t))


@dataclass(frozen=True)
class GradientCheck:
    kind: EnergyKind
    n_dirs: int
    step: float
    max_rel_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def finite_difference_check(
    kind: EnergyKind,
    data: ProblemData,
    w: ArrayLike,
    n_dirs: int = 10,
    seed: int = 0,
    step: float = 1e-6,
    tol: float = 1e-6,
) -> GradientCheck:
    """Central differences of E along random interior directions vs <grad E, h>.

    The error is scaled by |grad E|_2 |h|_2 so it stays meaningful near critical points.
    """
    f = Functional(kind, data)
    w = f.check_feasible(_values(w))
    if not math.isfinite(f.value(w)):
        raise SaturatedEnergyError("energy is +INF at w")
    g = f.gradient(w)
    gnorm = float(np.linalg.norm(g))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_dirs):
        h = np.zeros_like(w)
        h[f.interior] = rng.standard_normal(int(f.interior.sum()))
        hnorm = float(np.linalg.norm(h))
        if hnorm == 0.0:
            continue
        fd = (f.change(w, h, step) - f.change(w, h, -step)) / (2.0 * step)
        an = math.fsum(np.ravel(g * h))
        scale = max(gnorm * hnorm, np.finfo(float).tiny)
        worst = max(worst, abs(fd - an) / scale)
    return GradientCheck(EnergyKind(kind), n_dirs, step, worst, tol)
