"""Numerical checks of the functional inequalities and the proof envelope.

Three inequalities are checked on discretized positive test functions
V in C1, for lambda >= 1 (and a free epsilon > 0 where applicable):

  boundary-trace (any N):
      int_dOmega V^lambda <= (N/rho0) int V^lambda
                             + (d lambda / rho0) int V^{lambda-1} |grad V|
  interp-2d (N = 2):
      int V^{3 lambda/2} <= (sqrt2 / (2 rho0)) [ (int V^lambda)^{3/2}
          + (d + rho0)/(2 eps^2) (int V^lambda)^2
          + (d + rho0) eps^2 / 2 * int |grad V^{lambda/2}|^2 ]
  interp-3d (N = 3):
      int V^{3 lambda/2} <= sqrt2 [ (3/(2 rho0))^{3/2} (int V^lambda)^{3/2}
          + (1/(4 eps^3)) (1 + d/rho0)^{3/2} (int V^lambda)^3
          + (3/4) (1 + d/rho0)^{3/2} eps * int |grad V^{lambda/2}|^2 ]

Both sides use the solver's second-order quadrature and central-difference
gradients, plus a 2x/4x refinement ladder so that a negative margin can be
told apart from discretization error.  The per-case quadrature tolerance is
(|lhs| + |rhs|) / resolution^2.

check_phi_envelope validates the differential inequality
phi' <= c1 phi + c5 phi^topexp sample-to-sample on simulation output.  The
difference quotient over [t_i, t_{i+1}] equals phi'(xi) at an interior
point, so it is compared against the envelope evaluated at the larger of
the two endpoint values (for monotone phi that dominates phi(xi)); a
left-endpoint comparison would be violated by the exact solution itself
whenever phi grows superlinearly between samples.  A one-sided 5% tolerance
plus an h^2 allowance absorbs discretization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import ConstantsLedger, VARIANT_2D, VARIANT_3D
from .errors import DomainError, RegimeError
from .geometry import (
    INTERVAL,
    RECTANGLE,
    DomainGeometry,
    DomainShape,
    SpatialGrid,
    boundary_integrate,
    build_grid,
    compute_geometry,
    gradient_magnitude,
    integrate,
)
from .pde import SimulationSeries

BOUNDARY_TRACE = "boundary-trace"
INTERP_2D = "interp-2d"
INTERP_3D = "interp-3d"

ENVELOPE_TOL = 0.05
ENVELOPE_H2_COEFF = 1.0


@dataclass(frozen=True)
class TestFunctionSpec:
    """Deterministic positive C1 test-function generator.

    trig-exp draws V = exp(W) with W a seeded cosine mix of total amplitude
    at most ``amplitude`` (<= 2), so positivity and smoothness hold by
    construction; on radial grids only even modes appear (W'(0) = 0), which
    keeps V smooth across the origin.
    """

    kind: str = "trig-exp"  # constant | radial-polynomial | trig-exp
    seed: int = 0
    amplitude: float = 1.0
    n_terms: int = 4

    def evaluate(self, grid: SpatialGrid) -> np.ndarray:
        if self.kind == "constant":
            shape = grid.cell_weights.shape
            return np.full(shape, max(self.amplitude, 1e-8))
        if grid.kind == RECTANGLE:
            x, y = grid.nodes
            Lx, Ly = grid.geometry.shape.extents
            xi = x[:, None] / Lx
            eta = y[None, :] / Ly
            if self.kind == "radial-polynomial":
                rr = xi**2 + eta**2
                return 1.0 + self.amplitude * rr / 2.0
            rng = np.random.default_rng(self.seed)
            amps = rng.uniform(-1.0, 1.0, self.n_terms)
            amps *= self.amplitude * rng.uniform(0.3, 1.0) / max(np.sum(np.abs(amps)), 1e-12)
            thx = rng.uniform(0.0, 2.0 * math.pi, self.n_terms)
            thy = rng.uniform(0.0, 2.0 * math.pi, self.n_terms)
            w = np.zeros((len(x), len(y)))
            for j in range(self.n_terms):
                w += amps[j] * np.cos((j + 1) * math.pi * xi + thx[j]) * np.cos(
                    (j + 1) * math.pi * eta + thy[j]
                )
            return np.exp(w)
        nodes = np.asarray(grid.nodes)
        extent = grid.geometry.shape.extents[0]
        xi = nodes / extent
        if self.kind == "radial-polynomial":
            return 1.0 + self.amplitude * xi**2 / 2.0
        rng = np.random.default_rng(self.seed)
        amps = rng.uniform(-1.0, 1.0, self.n_terms)
        amps *= self.amplitude * rng.uniform(0.3, 1.0) / max(np.sum(np.abs(amps)), 1e-12)
        if grid.kind == INTERVAL:
            phases = rng.uniform(0.0, 2.0 * math.pi, self.n_terms)
        else:
            phases = np.zeros(self.n_terms)  # even modes only: W'(0) = 0
        w = np.zeros_like(xi)
        for j in range(self.n_terms):
            w += amps[j] * np.cos((j + 1) * math.pi * xi + phases[j])
        return np.exp(w)


@dataclass(frozen=True)
class InequalityCase:
    inequality: str
    lam: float
    epsilon: float | None
    test_function: TestFunctionSpec
    resolution: int

    def __post_init__(self) -> None:
        if self.inequality not in (BOUNDARY_TRACE, INTERP_2D, INTERP_3D):
            raise DomainError(f"unknown inequality {self.inequality!r}")
        if self.lam < 1.0:
            raise DomainError("lambda must be >= 1")
        if self.inequality != BOUNDARY_TRACE and (self.epsilon is None or self.epsilon <= 0.0):
            raise DomainError("interpolation inequalities need epsilon > 0")


@dataclass(frozen=True)
class InequalityReport:
    case: InequalityCase
    lhs: float
    rhs: float
    margin: float
    margin_refined: tuple[float, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.margin >= -10.0 * self.tolerance


def quadrature_tolerance(lhs: float, rhs: float, resolution: int) -> float:
    return (abs(lhs) + abs(rhs)) / float(resolution) ** 2


def _sides(case: InequalityCase, geom: DomainGeometry, resolution: int) -> tuple[float, float]:
    grid = build_grid(geom, resolution)
    v = case.test_function.evaluate(grid)
    if np.any(v <= 0.0):
        raise DomainError("test function must be strictly positive")
    lam = case.lam
    rho0, d, N = geom.rho0, geom.d, geom.dimension
    if case.inequality == BOUNDARY_TRACE:
        lhs = boundary_integrate(grid, v, lam)
        grad = gradient_magnitude(grid, v)
        rhs = (N / rho0) * integrate(grid, v, lam) + (d * lam / rho0) * integrate(
            grid, v ** (lam - 1.0) * grad, 1.0
        )
        return lhs, rhs
    eps = float(case.epsilon)
    lhs = integrate(grid, v, 1.5 * lam)
    mass = integrate(grid, v, lam)
    dirichlet = integrate(grid, gradient_magnitude(grid, v ** (lam / 2.0)), 2.0)
    if case.inequality == INTERP_2D:
        rhs = (math.sqrt(2.0) / (2.0 * rho0)) * (
            mass**1.5
            + (d + rho0) / (2.0 * eps * eps) * mass * mass
            + (d + rho0) * eps * eps / 2.0 * dirichlet
        )
    else:
        shape32 = (1.0 + d / rho0) ** 1.5
        rhs = math.sqrt(2.0) * (
            (3.0 / (2.0 * rho0)) ** 1.5 * mass**1.5
            + shape32 / (4.0 * eps**3) * mass**3
            + 0.75 * shape32 * eps * dirichlet
        )
    return lhs, rhs


def check_inequality(case: InequalityCase, geom: DomainGeometry) -> InequalityReport:
    """Evaluate one inequality at the case resolution and a 2x/4x ladder."""
    if case.inequality == INTERP_2D and geom.dimension != 2:
        raise DomainError("interp-2d needs a 2-D domain")
    if case.inequality == INTERP_3D and geom.dimension != 3:
        raise DomainError("interp-3d needs a 3-D domain")
    lhs, rhs = _sides(case, geom, case.resolution)
    margins = []
    for factor in (2, 4):
        l2, r2 = _sides(case, geom, case.resolution * factor)
        margins.append(r2 - l2)
    return InequalityReport(
        case,
        lhs=lhs,
        rhs=rhs,
        margin=rhs - lhs,
        margin_refined=(margins[0], margins[1]),
        tolerance=quadrature_tolerance(lhs, rhs, case.resolution),
    )


_SUITE_SHAPES = {
    BOUNDARY_TRACE: (
        DomainShape.interval(1.0),
        DomainShape.disk(1.0),
        DomainShape.ball(1.0),
    ),
    INTERP_2D: (DomainShape.disk(1.0),),
    INTERP_3D: (DomainShape.ball(1.0),),
}
_SUITE_LAMBDAS = (1.0, 2.0, 3.5)
_SUITE_EPSILONS = (0.5, 1.0, 2.0)


def standard_suite(seed: int, resolution: int = 128,
                   functions_per_case: int = 4) -> list[InequalityReport]:
    """The seeded inequality battery: >= 100 positive test functions across
    {boundary-trace on N=1,2,3; interp-2d; interp-3d} x lambda x epsilon."""
    reports: list[InequalityReport] = []
    case_index = 0
    for inequality, shapes in _SUITE_SHAPES.items():
        epsilons = (None,) if inequality == BOUNDARY_TRACE else _SUITE_EPSILONS
        for shape in shapes:
            geom = compute_geometry(shape)
            for lam in _SUITE_LAMBDAS:
                for eps in epsilons:
                    for j in range(functions_per_case):
                        spec = TestFunctionSpec(
                            kind="trig-exp",
                            seed=seed * 1_000_003 + case_index * 101 + j,
                            amplitude=0.5 + 1.5 * ((j + 1) / functions_per_case),
                            n_terms=3 + (j % 3),
                        )
                        case = InequalityCase(inequality, lam, eps, spec, resolution)
                        reports.append(check_inequality(case, geom))
                    case_index += 1
    return reports


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    worst_ratio: float
    tolerance: float

    def __bool__(self) -> bool:
        return self.passed


def check_phi_envelope(series: SimulationSeries, ledger: ConstantsLedger,
                       h: float | None = None) -> EnvelopeReport:
    """Sample-to-sample check of phi' <= c1 phi + c5 phi^{3 or 2}."""
    if ledger.variant == VARIANT_3D:
        top = 3
    elif ledger.variant == VARIANT_2D:
        top = 2
    else:
        raise RegimeError("phi envelope applies to blow-up variants only")
    if series.info is not None:
        if ledger.variant == VARIANT_3D and series.info.geometry.dimension != 3:
            raise RegimeError("3-D ledger paired with a non-3-D simulation")
        if ledger.variant == VARIANT_2D and series.info.geometry.dimension != 2:
            raise RegimeError("2-D ledger paired with a non-2-D simulation")
        if series.info.params != ledger.params:
            raise RegimeError("series and ledger come from different parameters")
        if h is None:
            h = series.info.h
    h = 0.0 if h is None else float(h)
    tol = ENVELOPE_TOL + ENVELOPE_H2_COEFF * h * h

    c1, c5 = ledger.c1, ledger.c5
    worst = 0.0
    for left, right in zip(series.samples[:-1], series.samples[1:]):
        dt = right.t - left.t
        if dt <= 0.0:
            continue
        quotient = (right.phi - left.phi) / dt
        phi = max(left.phi, right.phi)
        envelope = c1 * phi + c5 * phi**top
        if envelope <= 0.0:
            continue
        ratio = quotient / envelope
        if ratio > worst:
            worst = ratio
    return EnvelopeReport(passed=worst <= 1.0 + tol, worst_ratio=worst, tolerance=tol)
