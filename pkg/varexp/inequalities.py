# varexp/inequalities.py
"""
Numerical certificates for the convexity inequalities behind the modulars.

  - clarkson_low / clarkson_high : vector Clarkson-type inequalities (1<=p<=2, p>=2)
  - clarkson_sweep               : the same over many seeded random pairs
  - gradient_clarkson_check      : cellwise on two gradient fields
  - lemma_stupid_check           : ln t/(t-1) decreasing and < 1, t^(1/(t-1)) < e
  - uc_star_probe                : empirical uniform-convexity gap of a modular
  - strict_convexity_witness     : strict midpoint convexity of rho_{1,p}
  - monotonicity_gap / _sweep    : <|A|^(p-2)A - |B|^(p-2)B, A-B> >= 2^(2-p)|A-B|^p
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from varexp.exponent import ExponentField
from varexp.grid import GridFunction, gradient
from varexp.modular import ModularKind, modular_eval_batch

logger = logging.getLogger(__name__)

CHUNK = 4096


class Sides(NamedTuple):
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + 1e-12 * abs(self.rhs)


@dataclass(frozen=True)
class SweepResult:
    name: str
    n: int
    worst: float  # max relative excess (lhs - rhs)/rhs, or min quotient for monotonicity
    bound: float
    passed: bool


# =========================
# Vector inequalities
# =========================
def _vec(a) -> np.ndarray:
    return np.atleast_1d(np.asarray(a, dtype=float))


def clarkson_low(u, v, p: float) -> Sides:
    u, v = _vec(u), _vec(v)
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"clarkson_low needs 1 <= p <= 2, got {p}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu + nv == 0:
        raise ValueError("clarkson_low needs |u| + |v| > 0")
    mid = np.linalg.norm((u + v) / 2.0) ** p
    corr = p * (p - 1.0) / 2.0 ** (p + 1.0) * np.linalg.norm(u - v) ** 2 / (nu + nv) ** (2.0 - p)
    return Sides(float(mid + corr), float((nu**p + nv**p) / 2.0))


def clarkson_high(u, v, p: float) -> Sides:
    u, v = _vec(u), _vec(v)
    if p < 2.0:
        raise ValueError(f"clarkson_high needs p >= 2, got {p}")
    lhs = np.linalg.norm((u + v) / 2.0) ** p + np.linalg.norm((u - v) / 2.0) ** p
    rhs = (np.linalg.norm(u) ** p + np.linalg.norm(v) ** p) / 2.0
    return Sides(float(lhs), float(rhs))


def _clarkson_batch(u: np.ndarray, v: np.ndarray, p: np.ndarray, low: np.ndarray) -> np.ndarray:
    """Relative excess (lhs - rhs)/rhs per row; `low` selects the 1<=p<=2 form."""
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    nmid = np.linalg.norm(u + v, axis=-1) / 2.0
    ndiff = np.linalg.norm(u - v, axis=-1)
    rhs = (nu**p + nv**p) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        corr_low = p * (p - 1.0) / 2.0 ** (p + 1.0) * ndiff**2 / (nu + nv) ** (2.0 - p)
    corr_low = np.where(nu + nv > 0, corr_low, 0.0)
    corr_high = (ndiff / 2.0) ** p
    lhs = nmid**p + np.where(low, corr_low, corr_high)
    with np.errstate(divide="ignore", invalid="ignore"):
        excess = np.where(rhs > 0, (lhs - rhs) / rhs, lhs - rhs)
    return excess


def clarkson_sweep(
    n_pairs: int,
    seed: int,
    regime: str = "low",
    dims: Sequence[int] = (1, 2, 3, 4),
    p_range: Optional[Tuple[float, float]] = None,
) -> SweepResult:
    """n_pairs random pairs per dimension; p uniform in p_range ([1,2] low, [2,50] high)."""
    if regime not in ("low", "high"):
        raise ValueError(f"regime must be 'low' or 'high', got {regime!r}")
    lo, hi = p_range or ((1.0, 2.0) if regime == "low" else (2.0, 50.0))
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for d in dims:
        done = 0
        while done < n_pairs:
            m = min(CHUNK * 8, n_pairs - done)
            u = rng.normal(size=(m, d)) * rng.uniform(0.1, 3.0, size=(m, 1))
            v = rng.normal(size=(m, d)) * rng.uniform(0.1, 3.0, size=(m, 1))
            p = rng.uniform(lo, hi, size=m)
            excess = _clarkson_batch(u, v, p, np.full(m, regime == "low"))
            worst = max(worst, float(np.max(excess)))
            done += m
    passed = worst <= 1e-12
    logger.info("[clarkson] regime=%s n=%d worst_excess=%.3e passed=%s", regime, n_pairs, worst, passed)
    return SweepResult(f"clarkson_{regime}", n_pairs * len(dims), worst, 1e-12, passed)


def gradient_clarkson_check(u: GridFunction, v: GridFunction, p) -> SweepResult:
    """Cellwise vector inequalities on grad u, grad v with the cell exponent."""
    u.grid.require_same(v.grid)
    gu = gradient(u).vectors.reshape(-1, u.grid.dim)
    gv = gradient(v).vectors.reshape(-1, u.grid.dim)
    pv = p.values if isinstance(p, ExponentField) else np.asarray(p, dtype=float)
    pv = np.broadcast_to(pv, u.grid.cell_shape).reshape(-1)
    keep = (np.linalg.norm(gu, axis=-1) + np.linalg.norm(gv, axis=-1)) > 0
    excess = _clarkson_batch(gu[keep], gv[keep], pv[keep], pv[keep] <= 2.0)
    worst = float(np.max(excess)) if excess.size else 0.0
    return SweepResult("gradient_clarkson", int(keep.sum()), worst, 1e-12, worst <= 1e-12)


# =========================
# Lemma on ln t/(t-1)
# =========================
@dataclass(frozen=True)
class LemmaReport:
    n_samples: int
    decreasing: bool
    below_one: bool
    root_below_e: bool
    limit_at_one: float
    limit_ok: bool

    @property
    def passed(self) -> bool:
        return self.decreasing and self.below_one and self.root_below_e and self.limit_ok


def _f(t: np.ndarray) -> np.ndarray:
    return np.log1p(t - 1.0) / (t - 1.0)


def lemma_stupid_check(t_samples: Sequence[float]) -> LemmaReport:
    t = np.asarray(t_samples, dtype=float)
    if t.size == 0 or np.any(t <= 1.0):
        raise ValueError("samples must be > 1")
    if np.any(np.diff(t) <= 0):
        raise ValueError("samples must be strictly increasing")
    f = _f(t)
    h = 1e-8
    limit = math.log1p(h) / h
    report = LemmaReport(
        n_samples=int(t.size),
        decreasing=bool(np.all(np.diff(f) < 0)),
        below_one=bool(np.all(f < 1.0)),
        # t^(1/(t-1)) = exp(f(t))
        root_below_e=bool(np.all(np.exp(f) < math.e)),
        limit_at_one=limit,
        limit_ok=1.0 - 1e-6 < limit < 1.0,
    )
    logger.info("[lemmas] samples=%d passed=%s", report.n_samples, report.passed)
    return report


# =========================
# UC* probe
# =========================
@dataclass(frozen=True)
class UcStarEstimate:
    kind: str
    epsilon: float
    delta_formula: float
    delta_empirical: Optional[float]
    n_samples: int
    n_admissible: int
    p_minus: float
    min_admissible: int = 0

    @property
    def holds(self) -> bool:
        return self.delta_empirical is not None and self.delta_empirical >= self.delta_formula - 1e-9

    @property
    def covered(self) -> bool:
        return self.n_admissible >= max(self.min_admissible, 1)


def delta_formula(epsilon: float, p_minus: float) -> float:
    return min(epsilon / 2.0, (p_minus - 1.0) * epsilon**2 / 32.0)


def sample_pairs(rng: np.random.Generator, shape: Tuple[int, ...], m: int, spike_prob: float = 0.1):
    """
    Node values uniform in [-2, 2] with sparse spikes of size 2..6; half of
    the pairs are near-antipodal (v = -s u + noise), which keeps pairs
    admissible when large exponents make halving expensive.
    """

    def draw():
        base = rng.uniform(-2.0, 2.0, size=(m,) + shape)
        spikes = rng.random(size=base.shape) < spike_prob
        sizes = rng.uniform(2.0, 6.0, size=base.shape) * rng.choice([-1.0, 1.0], size=base.shape)
        return np.where(spikes, sizes, base)

    u = draw()
    v = draw()
    anti = rng.random(m) < 0.5
    s = rng.uniform(0.8, 1.2, size=(m,) + (1,) * len(shape))
    near = -s * u + 0.05 * rng.normal(size=u.shape)
    v = np.where(anti.reshape((m,) + (1,) * len(shape)), near, v)
    return u, v


def uc_star_probe(
    kind: ModularKind,
    p: ExponentField,
    epsilon: float,
    n_samples: int,
    seed: int,
    spike_prob: float = 0.1,
    min_admissible: int = 0,
    max_samples: Optional[int] = None,
) -> UcStarEstimate:
    """
    Empirical delta(eps) over n_samples pairs; with min_admissible > 0 keeps
    drawing chunks until that many admissible pairs are seen or max_samples
    (default 50 * max(n_samples, min_admissible)) pairs have been drawn.
    """
    kind = ModularKind(kind)
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    if not p.p_minus > 1.0:
        raise ValueError("uc_star_probe needs p_minus > 1")
    if n_samples < 1 or min_admissible < 0:
        raise ValueError("need n_samples >= 1 and min_admissible >= 0")

    shape = p.grid.shape
    budget = max_samples if max_samples is not None else 50 * max(n_samples, min_admissible)
    budget = max(budget, n_samples)
    seeds = np.random.SeedSequence(seed)
    n_adm = 0
    max_ratio = -math.inf
    done = 0
    while done < n_samples or (n_adm < min_admissible and done < budget):
        m = min(CHUNK, (n_samples if done < n_samples else budget) - done)
        (child,) = seeds.spawn(1)
        u, v = sample_pairs(np.random.default_rng(child), shape, m, spike_prob)
        ru = modular_eval_batch(kind, u, p)
        rv = modular_eval_batch(kind, v, p)
        rdiff = modular_eval_batch(kind, (u - v) / 2.0, p)
        rmid = modular_eval_batch(kind, (u + v) / 2.0, p)
        avg = (ru + rv) / 2.0
        finite = np.isfinite(ru) & np.isfinite(rv) & np.isfinite(rdiff) & (avg > 0)
        adm = finite & (rdiff >= epsilon * avg)
        if np.any(adm):
            max_ratio = max(max_ratio, float(np.max(rmid[adm] / avg[adm])))
            n_adm += int(adm.sum())
        done += m

    if n_adm == 0:
        logger.warning("[ucstar] kind=%s eps=%g: no admissible pairs in %d samples", kind.value, epsilon, done)
        delta_emp = None
    else:
        delta_emp = float(np.clip(1.0 - max_ratio, 0.0, 1.0))
    est = UcStarEstimate(
        kind=kind.value,
        epsilon=float(epsilon),
        delta_formula=delta_formula(epsilon, p.p_minus),
        delta_empirical=delta_emp,
        n_samples=done,
        n_admissible=n_adm,
        p_minus=p.p_minus,
        min_admissible=int(min_admissible),
    )
    logger.info(
        "[ucstar] kind=%s eps=%g admissible=%d/%d delta_emp=%s delta_formula=%.6g",
        kind.value, epsilon, n_adm, done, delta_emp, est.delta_formula,
    )
    return est


def strict_convexity_witness(p: ExponentField, n_pairs: int, seed: int) -> SweepResult:
    """Smallest (rho(u)+rho(v))/2 - rho((u+v)/2) for rho_{1,p} over pairs u != v."""
    rng = np.random.default_rng(seed)
    u, v = sample_pairs(rng, p.grid.shape, n_pairs)
    same = np.all(u == v, axis=tuple(range(1, u.ndim)))
    u, v = u[~same], v[~same]
    ru = modular_eval_batch(ModularKind.RHO_1P, u, p)
    rv = modular_eval_batch(ModularKind.RHO_1P, v, p)
    rmid = modular_eval_batch(ModularKind.RHO_1P, (u + v) / 2.0, p)
    finite = np.isfinite(ru) & np.isfinite(rv)
    gaps = (ru[finite] + rv[finite]) / 2.0 - rmid[finite]
    worst = float(np.min(gaps)) if gaps.size else math.nan
    return SweepResult("strict_convexity", int(gaps.size), worst, 0.0, bool(gaps.size) and worst > 0.0)


# =========================
# Monotonicity of A -> |A|^(p-2) A
# =========================
class Gap(NamedTuple):
    lhs: float
    gamma_bound: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.gamma_bound - 1e-12


def gamma(p: float) -> float:
    return 2.0 ** (2.0 - p)


def _quotient(A: np.ndarray, B: np.ndarray, p: float) -> np.ndarray:
    na = np.linalg.norm(A, axis=-1, keepdims=True)
    nb = np.linalg.norm(B, axis=-1, keepdims=True)
    fa = na ** (p - 2.0) * A
    fb = nb ** (p - 2.0) * B
    d = A - B
    return np.sum((fa - fb) * d, axis=-1) / np.linalg.norm(d, axis=-1) ** p


def monotonicity_gap(A, B, p: float) -> Gap:
    A, B = _vec(A), _vec(B)
    if p < 2.0:
        raise ValueError(f"monotonicity_gap needs p >= 2, got {p}")
    if np.array_equal(A, B):
        raise ValueError("monotonicity_gap needs A != B")
    return Gap(float(_quotient(A, B, p)), gamma(p))


def monotonicity_sweep(p: float, n_pairs: int, seed: int, dim: int = 3) -> SweepResult:
    """Infimum of the quotient over random pairs on the unit sphere."""
    if p < 2.0:
        raise ValueError(f"monotonicity_sweep needs p >= 2, got {p}")
    rng = np.random.default_rng(seed)
    worst = math.inf
    done = 0
    while done < n_pairs:
        m = min(CHUNK * 16, n_pairs - done)
        A = rng.normal(size=(m, dim))
        B = rng.normal(size=(m, dim))
        A /= np.linalg.norm(A, axis=-1, keepdims=True)
        B /= np.linalg.norm(B, axis=-1, keepdims=True)
        worst = min(worst, float(np.min(_quotient(A, B, p))))
        done += m
    bound = gamma(p)
    passed = worst >= bound - 1e-12
    logger.info("[monotonicity] p=%g n=%d min=%.12g gamma=%.12g passed=%s", p, n_pairs, worst, bound, passed)
    return SweepResult(f"monotonicity_p{p:g}", n_pairs, worst, bound, passed)
