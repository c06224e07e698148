# varexp/solver.py
"""
Discrete Dirichlet problem: minimize E(w) over interior node values.

The returned solution is v = phi - w*, so v carries phi's boundary values and
(by the symmetry |d|^p = |-d|^p) is the p(x)-harmonic function with datum phi.

Modes
  - descent : steepest descent (default)
  - cg      : Polak-Ribiere+ nonlinear CG with steepest-descent restarts
  - lbfgs   : limited-memory BFGS, two-loop recursion

Every mode uses the same Armijo backtracking on the stable energy difference;
a step whose energy is +INF is rejected and halved without counting against
max_backtracks, and the first trial step of a fresh direction moves no node by
more than 1. The energy trace never increases.
"""

from __future__ import annotations

import enum
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from varexp.energy import EnergyKind, Functional, ProblemData
from varexp.exceptions import GridError, NotConvergedError, SaturatedEnergyError
from varexp.exponent import ExponentField
from varexp.grid import GridFunction
from varexp.modular import ModularKind, modular_eval_batch

logger = logging.getLogger(__name__)

MODES = ("descent", "cg", "lbfgs")
INITS = ("zeros", "random", "provided")


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    SATURATED_ENERGY = "saturated_energy"
    # line search cannot decrease the energy any further above grad_tol
    STALLED = "stalled"


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-8
    max_iters: int = 20000
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    init: str = "zeros"
    seed: int = 0
    initial: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    mode: str = "descent"
    memory: int = 8
    max_backtracks: int = 60
    record_cauchy: bool = True

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError(f"grad_tol must be > 0, got {self.grad_tol}")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if not 0 < self.armijo_c < 1:
            raise ValueError(f"armijo_c must lie in (0,1), got {self.armijo_c}")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError(f"backtrack_factor must lie in (0,1), got {self.backtrack_factor}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}, got {self.init!r}")
        if self.init == "provided" and self.initial is None:
            raise ValueError("init='provided' needs an initial iterate")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.memory < 1:
            raise ValueError(f"memory must be >= 1, got {self.memory}")
        if self.max_backtracks < 1:
            raise ValueError(f"max_backtracks must be >= 1, got {self.max_backtracks}")


@dataclass
class SolverReport:
    solution: GridFunction
    final_energy: float
    iterations: int
    energy_trace: List[float]
    grad_norm_trace: List[float]
    termination: Termination
    cauchy_trace: List[float] = field(default_factory=list)
    kind: str = ""
    mode: str = "descent"

    @property
    def converged(self) -> bool:
        return self.termination == Termination.CONVERGED

    @property
    def grad_norm(self) -> float:
        return self.grad_norm_trace[-1] if self.grad_norm_trace else math.nan

    def summary(self) -> dict:
        return {
            "termination": self.termination.value,
            "iterations": self.iterations,
            "final_energy": self.final_energy,
            "final_grad_norm": self.grad_norm,
            "kind": self.kind,
            "mode": self.mode,
        }


# =========================
# Helpers
# =========================
def _initial_iterate(f: Functional, cfg: SolverConfig) -> np.ndarray:
    grid = f.grid
    if cfg.init == "zeros":
        return np.zeros(grid.shape)
    if cfg.init == "provided":
        w = np.array(cfg.initial, dtype=float)
        if w.shape != grid.shape:
            raise GridError(f"initial iterate must have shape {grid.shape}, got {w.shape}")
        w[~f.interior] = 0.0
        return w
    rng = np.random.default_rng(cfg.seed)
    scale = max(1.0, float(np.max(np.abs(f.phi))))
    w = np.zeros(grid.shape)
    w[f.interior] = 0.1 * scale * rng.uniform(-1.0, 1.0, size=int(f.interior.sum()))
    return w


def _sup(g: np.ndarray) -> float:
    return float(np.max(np.abs(g))) if g.size else 0.0


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return math.fsum(np.ravel(a * b))


_STEP_FLOOR = np.finfo(float).tiny


def _scaled_step(d: np.ndarray) -> float:
    """First trial step without history: the largest nodal move is at most 1."""
    dsup = _sup(d)
    return min(1.0, 1.0 / dsup) if dsup > 0 else 1.0


class _Lbfgs:
    def __init__(self, memory: int):
        self.pairs = deque(maxlen=memory)

    def reset(self):
        self.pairs.clear()

    @property
    def empty(self) -> bool:
        return not self.pairs

    def push(self, s: np.ndarray, y: np.ndarray):
        sy = _dot(s, y)
        # curvature condition; skip pairs that would break positive definiteness
        if sy > 1e-300 and sy > 1e-12 * math.sqrt(_dot(s, s) * _dot(y, y)):
            self.pairs.append((s, y, 1.0 / sy))

    def direction(self, g: np.ndarray) -> np.ndarray:
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * _dot(s, q)
            alphas.append(a)
            q -= a * y
        if self.pairs:
            s, y, _ = self.pairs[-1]
            q *= _dot(s, y) / _dot(y, y)
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * _dot(y, q)
            q += (a - b) * s
        return -q


# =========================
# Solve
# =========================
def solve_dirichlet(kind: EnergyKind, data: ProblemData, cfg: SolverConfig = SolverConfig()) -> SolverReport:
    f = Functional(kind, data)
    w = _initial_iterate(f, cfg)
    energy = f.value(w)

    def report(term: Termination, it: int, energies, grads, cauchy) -> SolverReport:
        sol = GridFunction(data.grid, f.phi - w)
        final = f.value(w)
        logger.info(
            "[solve] kind=%s mode=%s termination=%s iters=%d energy=%.12g grad=%.3e",
            f.kind.value, cfg.mode, term.value, it, final, grads[-1] if grads else math.nan,
        )
        return SolverReport(sol, final, it, energies, grads, term, cauchy, f.kind.value, cfg.mode)

    if not math.isfinite(energy):
        logger.warning("[solve] energy is +INF at the initial iterate")
        return report(Termination.SATURATED_ENERGY, 0, [math.inf], [], [])

    g = f.gradient(w)
    gnorm = _sup(g)
    energies = [energy]
    grads = [gnorm]
    cauchy: List[float] = []
    lbfgs = _Lbfgs(cfg.memory) if cfg.mode == "lbfgs" else None
    d_prev: Optional[np.ndarray] = None
    g_prev: Optional[np.ndarray] = None
    t_prev: Optional[float] = None
    n_interior = int(f.interior.sum())

    it = 0
    while gnorm > cfg.grad_tol:
        if it >= cfg.max_iters:
            return report(Termination.MAX_ITERS, it, energies, grads, cauchy)

        # --- 1) search direction ---
        if lbfgs is not None:
            d = lbfgs.direction(g)
        elif cfg.mode == "cg" and d_prev is not None and it % max(n_interior, 1) != 0:
            beta = max(0.0, _dot(g, g - g_prev) / _dot(g_prev, g_prev))
            d = -g + beta * d_prev
        else:
            d = -g
        slope = _dot(g, d)
        if not slope < 0:
            if lbfgs is not None:
                lbfgs.reset()
            d = -g
            slope = _dot(g, d)

        # --- 2) Armijo backtracking on E(w + t d) - E(w) ---
        if lbfgs is not None:
            t = _scaled_step(d) if lbfgs.empty else 1.0
        else:
            t = _scaled_step(d) if t_prev is None else min(2.0 * t_prev, 1e12)
        dsup = _sup(d)
        accepted = False
        misses = 0
        # +INF trials do not count against max_backtracks; they halve until t*|d| underflows
        while misses < cfg.max_backtracks and t * dsup > _STEP_FLOOR:
            delta = f.change(w, d, t)
            if math.isfinite(delta):
                if delta <= cfg.armijo_c * t * slope:
                    accepted = True
                    break
                misses += 1
            t *= cfg.backtrack_factor
        if not accepted:
            if lbfgs is not None and lbfgs.pairs:
                lbfgs.reset()
                continue
            if lbfgs is None and t_prev is not None:
                t_prev = None
                continue
            return report(Termination.STALLED, it, energies, grads, cauchy)

        # --- 3) accept ---
        step = t * d
        w_new = w + step
        w_new[~f.interior] = 0.0
        g_new = f.gradient(w_new)
        if lbfgs is not None:
            lbfgs.push(step, g_new - g)
        if cfg.record_cauchy:
            cauchy.append(float(modular_eval_batch(ModularKind.RHO_1P, step[None], data.p)[0]))
        d_prev, g_prev = d, g
        w, g, t_prev = w_new, g_new, t
        energy = energy + delta
        gnorm = _sup(g)
        energies.append(energy)
        grads.append(gnorm)
        it += 1
        if it % 500 == 0:
            logger.debug("[solve] iter=%d energy=%.15g grad=%.3e step=%.3e", it, energy, gnorm, t)

    return report(Termination.CONVERGED, it, energies, grads, cauchy)


# =========================
# 1D flux oracle
# =========================
def _slopes(p: np.ndarray, c: float) -> np.ndarray:
    """v' on each cell from the flux |v'|^(p-2) v' = c."""
    if c == 0:
        return np.zeros_like(p)
    with np.errstate(over="ignore"):
        return math.copysign(1.0, c) * np.exp(np.log(abs(c)) / (p - 1.0))


def oracle_1d_flux(p: ExponentField, a_val: float, b_val: float) -> GridFunction:
    """
    In 1D the discrete stationarity conditions say every cell carries the same
    flux c. Bisection on c for sum_c h_c v'_c = b_val - a_val, then cumulative
    sums give v.
    """
    grid = p.grid
    if grid.dim != 1:
        raise GridError("oracle_1d_flux needs a 1D grid")
    h = grid.widths[0]
    target = float(b_val) - float(a_val)
    values = np.full(grid.shape, float(a_val))
    if target == 0:
        return GridFunction(grid, values)

    def rise(c: float) -> float:
        return float(np.sum(h * _slopes(p.values, c)))

    # --- bracket: rise is odd and strictly increasing in c ---
    lo, hi = (0.0, 1.0) if target > 0 else (-1.0, 0.0)
    if target > 0:
        while rise(hi) < target:
            lo, hi = hi, 2.0 * hi
    else:
        while rise(lo) > target:
            lo, hi = 2.0 * lo, lo

    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if rise(mid) < target:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)

    values[1:] = a_val + np.cumsum(h * _slopes(p.values, c))
    values[-1] = b_val
    logger.debug("[oracle] flux=%.17g", c)
    return GridFunction(grid, values)


# =========================
# Certificates
# =========================
@dataclass(frozen=True)
class UniquenessResult:
    sup_diff: float
    report_a: SolverReport
    report_b: SolverReport


def uniqueness_probe(kind: EnergyKind, data: ProblemData, cfg_a: SolverConfig, cfg_b: SolverConfig) -> UniquenessResult:
    reports = []
    for cfg in (cfg_a, cfg_b):
        rep = solve_dirichlet(kind, data, cfg)
        if rep.termination == Termination.SATURATED_ENERGY:
            raise SaturatedEnergyError("uniqueness probe: initial energy is +INF")
        if not rep.converged:
            raise NotConvergedError(f"uniqueness probe: run stopped with {rep.termination.value}", rep)
        reports.append(rep)
    diff = reports[0].solution - reports[1].solution
    return UniquenessResult(diff.sup_norm(), reports[0], reports[1])


@dataclass(frozen=True)
class CertificateResult:
    min_value: float
    n_dirs: int


def variational_certificate(
    kind: EnergyKind,
    data: ProblemData,
    v_star: GridFunction,
    n_dirs: int,
    seed: int,
) -> CertificateResult:
    """
    min over random competitors v of <S(v*), v - v*>, the one-sided derivative
    of the energy from v* toward v; >= 0 at the exact minimizer.
    """
    f = Functional(kind, data)
    w_star = f.check_feasible(f.phi - v_star.values)
    if not math.isfinite(f.value(w_star)):
        raise SaturatedEnergyError("energy is +INF at the candidate solution")
    grad = f.gradient(w_star)
    rng = np.random.default_rng(seed)
    m = int(f.interior.sum())
    worst = math.inf
    for _ in range(n_dirs):
        h = np.zeros(f.grid.shape)
        h[f.interior] = rng.normal(size=m)
        h /= math.sqrt(_dot(h, h))
        # keep the competitor at finite energy
        while not math.isfinite(f.value(w_star + h)):
            h *= 0.5
        worst = min(worst, _dot(grad, h))
    return CertificateResult(worst if n_dirs else 0.0, n_dirs)
