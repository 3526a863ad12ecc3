"""Spatial domains, their shape scalars, and quadrature grids.

Supported domains are the symmetric interval (-L, L), the disk and ball of
radius R handled in radial symmetry, and the axis-aligned rectangle
(-Lx, Lx) x (-Ly, Ly).  The origin x0 is fixed at the centroid, so the two
scalars that feed every bound formula,

    rho0 = min over the boundary of (x - x0) . nu,
    d    = max over the closure of |x - x0|,

have closed forms: rho0 = d = R for disk/ball, rho0 = d = L for the
interval, rho0 = min(Lx, Ly) and d = hypot(Lx, Ly) for the rectangle.

Interior quadrature weights are exact cell measures (the cell of a node is
the Voronoi interval/box around it, clipped to the domain, times the radial
Jacobian measure where applicable).  These weights integrate constants
exactly, which both the grid invariants and the solver's discrete mass
balance rely on; for the interval and rectangle they coincide with the
composite trapezoidal rule.  Boundary weights are exact for every supported
shape.  The boundary of the interval carries the counting measure of its
two endpoints, consistent with the 1-D divergence theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

INTERVAL = "interval"
DISK = "disk-radial"
BALL = "ball-radial"
RECTANGLE = "rectangle"

_DIMENSION = {INTERVAL: 1, DISK: 2, BALL: 3, RECTANGLE: 2}
_N_EXTENTS = {INTERVAL: 1, DISK: 1, BALL: 1, RECTANGLE: 2}

MIN_RESOLUTION = 8


@dataclass(frozen=True)
class DomainShape:
    """Shape descriptor: kind plus positive extents, origin at the centroid."""

    kind: str
    extents: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in _DIMENSION:
            raise ConfigurationError(f"unsupported shape kind {self.kind!r}")
        extents = tuple(float(e) for e in self.extents)
        if len(extents) != _N_EXTENTS[self.kind]:
            raise ConfigurationError(
                f"{self.kind} takes {_N_EXTENTS[self.kind]} extent(s), got {len(extents)}"
            )
        if any(not math.isfinite(e) or e <= 0.0 for e in extents):
            raise ConfigurationError(f"extents must be positive finite reals, got {extents}")
        object.__setattr__(self, "extents", extents)

    @property
    def dimension(self) -> int:
        return _DIMENSION[self.kind]

    @classmethod
    def interval(cls, half_length: float) -> "DomainShape":
        return cls(INTERVAL, (half_length,))

    @classmethod
    def disk(cls, radius: float) -> "DomainShape":
        return cls(DISK, (radius,))

    @classmethod
    def ball(cls, radius: float) -> "DomainShape":
        return cls(BALL, (radius,))

    @classmethod
    def rectangle(cls, half_width_x: float, half_width_y: float) -> "DomainShape":
        return cls(RECTANGLE, (half_width_x, half_width_y))


@dataclass(frozen=True)
class DomainGeometry:
    """Shape plus its derived scalars rho0, d, |Omega|, |dOmega| and N."""

    shape: DomainShape
    rho0: float
    d: float
    volume: float
    surface: float
    dimension: int


def compute_geometry(shape: DomainShape) -> DomainGeometry:
    """Closed-form geometry scalars for the supported shapes."""
    if shape.kind == INTERVAL:
        (L,) = shape.extents
        return DomainGeometry(shape, rho0=L, d=L, volume=2.0 * L, surface=2.0, dimension=1)
    if shape.kind == DISK:
        (R,) = shape.extents
        return DomainGeometry(
            shape, rho0=R, d=R, volume=math.pi * R * R, surface=2.0 * math.pi * R, dimension=2
        )
    if shape.kind == BALL:
        (R,) = shape.extents
        return DomainGeometry(
            shape,
            rho0=R,
            d=R,
            volume=4.0 * math.pi * R**3 / 3.0,
            surface=4.0 * math.pi * R * R,
            dimension=3,
        )
    if shape.kind == RECTANGLE:
        Lx, Ly = shape.extents
        return DomainGeometry(
            shape,
            rho0=min(Lx, Ly),
            d=math.hypot(Lx, Ly),
            volume=4.0 * Lx * Ly,
            surface=4.0 * (Lx + Ly),
            dimension=2,
        )
    raise ConfigurationError(f"unsupported shape kind {shape.kind!r}")


@dataclass(frozen=True)
class SpatialGrid:
    """Nodes plus interior/boundary quadrature weights on a domain.

    For the interval and the radial shapes ``nodes`` is the 1-D coordinate
    array (x, respectively r) and the weight arrays align with it.  For the
    rectangle ``nodes`` is the pair (x, y) of axis coordinates while the
    weight arrays have shape (len(x), len(y)).  ``boundary_weights`` is zero
    at interior nodes, so boundary integrals are plain weighted sums over
    the full node set.
    """

    geometry: DomainGeometry
    nodes: np.ndarray | tuple[np.ndarray, np.ndarray]
    cell_weights: np.ndarray
    boundary_weights: np.ndarray
    spacing: tuple[float, ...]
    resolution: int

    @property
    def kind(self) -> str:
        return self.geometry.shape.kind


def build_grid(geometry: DomainGeometry, resolution: int) -> SpatialGrid:
    """Uniform grid with exact cell-measure weights; resolution = cells per axis."""
    if resolution < MIN_RESOLUTION:
        raise ConfigurationError(
            f"resolution must be >= {MIN_RESOLUTION}, got {resolution}"
        )
    n = int(resolution)
    kind = geometry.shape.kind

    if kind == INTERVAL:
        (L,) = geometry.shape.extents
        h = 2.0 * L / n
        nodes = np.linspace(-L, L, n + 1)
        cell = np.full(n + 1, h)
        cell[0] = cell[-1] = 0.5 * h
        bweights = np.zeros(n + 1)
        bweights[0] = bweights[-1] = 1.0
        return SpatialGrid(geometry, nodes, cell, bweights, (h,), n)

    if kind in (DISK, BALL):
        (R,) = geometry.shape.extents
        N = geometry.dimension
        omega = 2.0 * math.pi if N == 2 else 4.0 * math.pi
        h = R / n
        nodes = np.linspace(0.0, R, n + 1)
        faces_hi = np.minimum(nodes + 0.5 * h, R)
        faces_lo = np.maximum(nodes - 0.5 * h, 0.0)
        cell = omega * (faces_hi**N - faces_lo**N) / N
        bweights = np.zeros(n + 1)
        bweights[-1] = omega * R ** (N - 1)
        return SpatialGrid(geometry, nodes, cell, bweights, (h,), n)

    if kind == RECTANGLE:
        Lx, Ly = geometry.shape.extents
        hx = 2.0 * Lx / n
        hy = 2.0 * Ly / n
        x = np.linspace(-Lx, Lx, n + 1)
        y = np.linspace(-Ly, Ly, n + 1)
        wx = np.full(n + 1, hx)
        wx[0] = wx[-1] = 0.5 * hx
        wy = np.full(n + 1, hy)
        wy[0] = wy[-1] = 0.5 * hy
        cell = np.outer(wx, wy)
        bweights = np.zeros((n + 1, n + 1))
        bweights[0, :] += wy
        bweights[-1, :] += wy
        bweights[:, 0] += wx
        bweights[:, -1] += wx
        return SpatialGrid(geometry, (x, y), cell, bweights, (hx, hy), n)

    raise ConfigurationError(f"unsupported shape kind {kind!r}")


def _powered(values: np.ndarray, exponent: float) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if exponent == 1.0:
        return values
    if exponent != round(exponent) and np.any(values < 0.0):
        raise DomainError(
            f"negative field value with non-integer exponent {exponent}"
        )
    return values**exponent


def integrate(grid: SpatialGrid, field_values: np.ndarray, exponent: float = 1.0) -> float:
    """Interior integral of V^exponent as the weighted nodal sum."""
    values = np.asarray(field_values, dtype=float)
    if values.shape != grid.cell_weights.shape:
        raise DomainError(
            f"field shape {values.shape} does not match grid {grid.cell_weights.shape}"
        )
    return float(np.sum(grid.cell_weights * _powered(values, float(exponent))))


def boundary_integrate(
    grid: SpatialGrid, field_values: np.ndarray, exponent: float = 1.0
) -> float:
    """Boundary integral of V^exponent using the grid's boundary weights."""
    values = np.asarray(field_values, dtype=float)
    if values.shape != grid.boundary_weights.shape:
        raise DomainError(
            f"field shape {values.shape} does not match grid {grid.boundary_weights.shape}"
        )
    return float(np.sum(grid.boundary_weights * _powered(values, float(exponent))))


def gradient_magnitude(grid: SpatialGrid, field_values: np.ndarray) -> np.ndarray:
    """|grad V| by second-order central differences (one-sided at the ends)."""
    values = np.asarray(field_values, dtype=float)
    if grid.kind == RECTANGLE:
        hx, hy = grid.spacing
        gx = np.gradient(values, hx, axis=0, edge_order=2)
        gy = np.gradient(values, hy, axis=1, edge_order=2)
        return np.sqrt(gx * gx + gy * gy)
    (h,) = grid.spacing
    return np.abs(np.gradient(values, h, edge_order=2))
