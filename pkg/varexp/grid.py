# varexp/grid.py
"""
Discretization of the domain (interval or rectangle).

  - Domain:       per-axis closed intervals, dim 1 or 2
  - Grid:         tensor lattice of nodes; uniform via build_grid, arbitrary
                  strictly increasing axes via Grid.from_axes
  - GridFunction: one real per node
  - GradientField: one vector per cell

Every integral is a midpoint rule over cells: sum_c f(c) * |c|.
The cell value of a node function is the average of the cell's corners, the
cell gradient is the first-order difference of the corners (2D: average of the
two opposing edge differences per axis). Both maps are linear; their adjoints
are exposed so energies can scatter cell quantities back onto nodes.

All array helpers accept leading batch axes: values of shape (..., *grid.shape).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from varexp.exceptions import GridError

MIN_NODES_PER_AXIS = 3


# =========================
# Domain
# =========================
@dataclass(frozen=True)
class Domain:
    bounds: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        if len(bounds) not in (1, 2):
            raise GridError(f"domain dimension must be 1 or 2, got {len(bounds)}")
        for axis, (a, b) in enumerate(bounds):
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise GridError(f"axis {axis}: need finite a < b, got [{a}, {b}]")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        return cls(((a, b),))

    @classmethod
    def rectangle(cls, ax: float, bx: float, ay: float, by: float) -> "Domain":
        return cls(((ax, bx), (ay, by)))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def measure(self) -> float:
        return math.prod(b - a for a, b in self.bounds)


# =========================
# Grid
# =========================
def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Domain
    axes: Tuple[np.ndarray, ...]
    cell_volumes: np.ndarray = field(init=False, repr=False)
    midpoints: Tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.axes) != self.domain.dim:
            raise GridError(f"{len(self.axes)} axes for a {self.domain.dim}D domain")
        axes = []
        for i, (ax, (a, b)) in enumerate(zip(self.axes, self.domain.bounds)):
            ax = np.array(ax, dtype=float)
            if ax.ndim != 1 or ax.size < MIN_NODES_PER_AXIS:
                raise GridError(
                    f"axis {i}: need at least {MIN_NODES_PER_AXIS} nodes (one interior node), got {ax.size}"
                )
            if not np.all(np.isfinite(ax)) or not np.all(np.diff(ax) > 0):
                raise GridError(f"axis {i}: node coordinates must be finite and strictly increasing")
            tol = 1e-12 * (b - a)
            if abs(ax[0] - a) > tol or abs(ax[-1] - b) > tol:
                raise GridError(f"axis {i}: nodes must start at {a} and end at {b}")
            ax[0], ax[-1] = a, b
            axes.append(_frozen(ax))
        object.__setattr__(self, "axes", tuple(axes))

        widths = [np.diff(ax) for ax in axes]
        vol = widths[0] if self.dim == 1 else np.outer(widths[0], widths[1])
        object.__setattr__(self, "cell_volumes", _frozen(vol))

        mids = [0.5 * (ax[:-1] + ax[1:]) for ax in axes]
        object.__setattr__(self, "midpoints", tuple(_frozen(m) for m in np.meshgrid(*mids, indexing="ij")))

    @classmethod
    def from_axes(cls, domain: Domain, axes: Sequence[Sequence[float]]) -> "Grid":
        return cls(domain, tuple(np.asarray(a, dtype=float) for a in axes))

    # ---- shape ----
    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(ax.size for ax in self.axes)

    @property
    def cell_shape(self) -> Tuple[int, ...]:
        return tuple(ax.size - 1 for ax in self.axes)

    @property
    def n_nodes(self) -> int:
        return math.prod(self.shape)

    @property
    def n_cells(self) -> int:
        return math.prod(self.cell_shape)

    @property
    def widths(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.diff(ax) for ax in self.axes)

    @property
    def h(self) -> Tuple[float, ...]:
        """Largest spacing per axis (the spacing itself on uniform grids)."""
        return tuple(float(w.max()) for w in self.widths)

    @property
    def is_uniform(self) -> bool:
        return all(np.allclose(w, w[0], rtol=1e-12, atol=0.0) for w in self.widths)

    @property
    def nodes(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.dim):
            index = [slice(None)] * self.dim
            index[axis] = 0
            mask[tuple(index)] = True
            index[axis] = -1
            mask[tuple(index)] = True
        return mask

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    @property
    def n_interior(self) -> int:
        return math.prod(n - 2 for n in self.shape)

    def same_as(self, other: "Grid") -> bool:
        if self is other:
            return True
        return (
            self.domain == other.domain
            and self.shape == other.shape
            and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
        )

    def require_same(self, other: "Grid") -> None:
        if not self.same_as(other):
            raise GridError(f"grid mismatch: {self.shape} vs {other.shape}")

    # ---- cell operators (linear, batch-friendly) ----
    def _corners(self, values: np.ndarray):
        if self.dim == 1:
            return values[..., :-1], values[..., 1:]
        return values[..., :-1, :-1], values[..., 1:, :-1], values[..., :-1, 1:], values[..., 1:, 1:]

    def cell_average(self, values: np.ndarray) -> np.ndarray:
        c = self._corners(np.asarray(values, dtype=float))
        if self.dim == 1:
            return 0.5 * (c[0] + c[1])
        return 0.25 * (c[0] + c[1] + c[2] + c[3])

    def cell_average_adjoint(self, cell_values: np.ndarray) -> np.ndarray:
        cell_values = np.asarray(cell_values, dtype=float)
        lead = cell_values.shape[: cell_values.ndim - self.dim]
        out = np.zeros(lead + self.shape)
        if self.dim == 1:
            half = 0.5 * cell_values
            out[..., :-1] += half
            out[..., 1:] += half
        else:
            quarter = 0.25 * cell_values
            out[..., :-1, :-1] += quarter
            out[..., 1:, :-1] += quarter
            out[..., :-1, 1:] += quarter
            out[..., 1:, 1:] += quarter
        return out

    def cell_gradient(self, values: np.ndarray) -> np.ndarray:
        """Cell vectors, shape (..., *cell_shape, dim)."""
        values = np.asarray(values, dtype=float)
        if self.dim == 1:
            u0, u1 = self._corners(values)
            return ((u1 - u0) / self.widths[0])[..., None]
        u00, u10, u01, u11 = self._corners(values)
        hx = self.widths[0][:, None]
        hy = self.widths[1][None, :]
        gx = ((u10 - u00) + (u11 - u01)) / (2.0 * hx)
        gy = ((u01 - u00) + (u11 - u10)) / (2.0 * hy)
        return np.stack([gx, gy], axis=-1)

    def cell_gradient_adjoint(self, cell_vectors: np.ndarray) -> np.ndarray:
        cell_vectors = np.asarray(cell_vectors, dtype=float)
        lead = cell_vectors.shape[: cell_vectors.ndim - self.dim - 1]
        out = np.zeros(lead + self.shape)
        if self.dim == 1:
            a = cell_vectors[..., 0] / self.widths[0]
            out[..., :-1] -= a
            out[..., 1:] += a
            return out
        a = cell_vectors[..., 0] / (2.0 * self.widths[0][:, None])
        b = cell_vectors[..., 1] / (2.0 * self.widths[1][None, :])
        out[..., :-1, :-1] += -a - b
        out[..., 1:, :-1] += a - b
        out[..., :-1, 1:] += -a + b
        out[..., 1:, 1:] += a + b
        return out

    def integrate(self, cell_values: np.ndarray) -> Union[float, np.ndarray]:
        """Midpoint rule; reduces the trailing cell axes in a fixed order."""
        cell_values = np.asarray(cell_values, dtype=float)
        axes = tuple(range(cell_values.ndim - self.dim, cell_values.ndim))
        total = np.sum(cell_values * self.cell_volumes, axis=axes)
        return float(total) if np.ndim(total) == 0 else total


def build_grid(domain: Domain, n_nodes: Union[int, Sequence[int]]) -> Grid:
    if isinstance(n_nodes, (int, np.integer)):
        n_nodes = (int(n_nodes),) * domain.dim
    n_nodes = tuple(int(n) for n in n_nodes)
    if len(n_nodes) != domain.dim:
        raise GridError(f"need {domain.dim} node counts, got {len(n_nodes)}")
    for axis, n in enumerate(n_nodes):
        if n < MIN_NODES_PER_AXIS:
            raise GridError(f"axis {axis}: n_nodes={n} < {MIN_NODES_PER_AXIS}, no interior node")
    axes = [np.linspace(a, b, n) for (a, b), n in zip(domain.bounds, n_nodes)]
    return Grid.from_axes(domain, axes)


def integrate(grid: Grid, cell_values: np.ndarray) -> float:
    cell_values = np.asarray(cell_values, dtype=float)
    if cell_values.shape != grid.cell_shape:
        raise GridError(f"expected cell values of shape {grid.cell_shape}, got {cell_values.shape}")
    if not np.all(np.isfinite(cell_values)):
        raise GridError("cell values must be finite")
    return grid.integrate(cell_values)


# =========================
# Node and cell fields
# =========================
@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridError(f"expected {self.grid.shape} node values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("grid function values must be finite")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "GridFunction":
        values = np.broadcast_to(np.asarray(fn(*grid.nodes), dtype=float), grid.shape)
        return cls(grid, values)

    def cell_values(self) -> np.ndarray:
        return self.grid.cell_average(self.values)

    def interior(self) -> np.ndarray:
        return self.values[self.grid.interior_mask]

    def with_interior(self, interior: np.ndarray) -> "GridFunction":
        values = self.values.copy()
        values[self.grid.interior_mask] = interior
        return GridFunction(self.grid, values)

    def boundary_is_zero(self) -> bool:
        return bool(np.all(self.values[self.grid.boundary_mask] == 0.0))

    # ---- linear structure ----
    def _other(self, other: "GridFunction") -> np.ndarray:
        self.grid.require_same(other.grid)
        return other.values

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + self._other(other))

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - self._other(other))

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, self.values / float(scalar))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class GradientField:
    grid: Grid
    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float)
        expected = self.grid.cell_shape + (self.grid.dim,)
        if vectors.shape != expected:
            raise GridError(f"expected gradient vectors of shape {expected}, got {vectors.shape}")
        if not np.all(np.isfinite(vectors)):
            raise GridError("gradient components must be finite")
        object.__setattr__(self, "vectors", _frozen(vectors))

    def magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=-1)


def gradient(u: GridFunction) -> GradientField:
    return GradientField(u.grid, u.grid.cell_gradient(u.values))
