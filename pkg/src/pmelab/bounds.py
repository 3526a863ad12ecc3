"""Explicit blow-up-time lower bounds and the global-existence ceiling.

The blow-up machinery tracks phi(t) = int_Omega u^{ms} (s = p - 1) and
assembles computable constants such that

    3-D:  phi' <= c1 phi + c2 phi^{3/2} + c3 phi^3
                 + c4 int |grad u^{ms/2}|^2 - b m s |Omega|^{(1-q)/ms} phi^{(ms+q-1)/ms},
    2-D:  the same with (c2, c3) multiplying (phi^{3/2}, phi^2).

The shared ingredients are the boundary-trace inequality applied with
lambda = 5ms/4 (coefficient 3/rho0 kept in both dimensions; it dominates
2/rho0, so the 2-D chain stays valid), four Holder/Young estimates, and the
dimension-specific interpolation inequality with lambda = ms.  Collecting
terms gives (see docs/bound_constants.md for the full bookkeeping)

    A1 = a (m-2) s |Omega| + 3 m^2 s k / (2 rho0)                  (= c1 = c1_2d)
    A2 = 2 a s |Omega| + 3 m^2 s k / (2 rho0) + 5 m^3 s^2 k d / (8 rho0 eps1)
    A4 = 5 m d k eps1 / (2 rho0) - c / (m s)

    3-D: c2 = A2 3^{3/2} / (2 rho0^{3/2}),
         c3 = A2 sqrt(2) (1 + d/rho0)^{3/2} / (4 eps2^3),
         c4 = A2 (3 sqrt(2)/4) (1 + d/rho0)^{3/2} eps2 + A4,
    2-D: c2 = A2 sqrt(2) / (2 rho0),
         c3 = A2 sqrt(2) (d + rho0) / (4 rho0 eps2^2),
         c4 = A2 (sqrt(2)/4) (d + rho0) eps2^2 / rho0 + A4.

eps1 must satisfy 0 < eps1 < 2 rho0 c / (5 m^2 s d k) so that A4 < 0; eps2
is then chosen as the unique value making c4 = 0 (any smaller eps2 inflates
c3 and weakens the bound).  A Young split of phi^{3/2} against
phi^{(ms+q-1)/ms} and the top power, with eps3 zeroing the middle
coefficient, finally yields

    3-D: phi' <= c1 phi + c5 phi^3,  T = log1p((c1/c5) phi0^{-2}) / (2 c1),
    2-D: phi' <= c1 phi + c5 phi^2,  T = log1p((c1/c5) phi0^{-1}) / c1.

The quadrature-form variants integrate the pre-split three-term right-hand
sides; in 2-D the integral has closed forms whenever the discriminant
Upsilon = 4 c1 c3 - c2^2 is nonnegative.

The global-existence regime instead tracks psi(t) = int u^2 and produces
the ceiling C = max{psi(0), |Omega| (M1/M2)^{2/(q-p)}} with

    sigma = k d (p+1)(m+1) / (4 rho0),   alpha = (q + m - 2p)/(q - p),
    eps   = b (m+1)^2 / (8 m sigma^2 (1 - alpha))   (which makes M2 = b),
    M1    = 2 k N m / rho0 + 2 a |Omega| + 8 m sigma^2 alpha eps^{(alpha-1)/alpha} / (m+1)^2.

The gradient-damping coefficient c never enters the global ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibilityError, QuadratureError, RegimeError
from .geometry import DomainGeometry
from .regime import ProblemParams, classify

VARIANT_3D = "thm1-3d"
VARIANT_2D = "thm2-2d"
VARIANT_GLOBAL = "thm3-global"

FORMULA_CLOSED_3D = "closed-3d"
FORMULA_CLOSED_2D = "closed-2d"
FORMULA_QUAD_3D = "quadrature-3d"
FORMULA_QUAD_2D = "quadrature-2d"
FORMULA_2D_UPS_POS = "closed-2d-upsilon-positive"
FORMULA_2D_UPS_ZERO = "closed-2d-upsilon-zero"
FORMULA_GLOBAL = "global-ceiling"

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class EpsilonChoice:
    """The (eps1, eps2, eps3) triple behind a blow-up constants ledger."""

    eps1: float
    eps2: float
    eps3: float
    eps1_max: float


@dataclass(frozen=True)
class ConstantsLedger:
    """Every intermediate constant of one bound variant, with provenance.

    For the 2-D variant the c1..c5 slots hold the barred constants.  The
    global variant populates sigma/alpha/eps_global/M1/M2 instead and has
    no epsilon triple (its eps has a closed form of its own).
    """

    variant: str
    params: ProblemParams
    geometry: DomainGeometry
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None
    c4: float | None = None
    c5: float | None = None
    upsilon: float | None = None
    sigma: float | None = None
    alpha: float | None = None
    eps_global: float | None = None
    M1: float | None = None
    M2: float | None = None
    epsilons: EpsilonChoice | None = None


@dataclass(frozen=True)
class BoundResult:
    """A computed lower bound T (or ceiling C) and the inputs behind it."""

    ledger: ConstantsLedger
    phi0: float
    value: float
    formula: str


def eps1_admissible_max(params: ProblemParams, geom: DomainGeometry) -> float:
    """Upper end of the admissible eps1 interval, 2 rho0 c / (5 m^2 s d k)."""
    m, s = params.m, params.s
    return 2.0 * geom.rho0 * params.c / (5.0 * m * m * s * geom.d * params.k)


def _shared_terms(params: ProblemParams, geom: DomainGeometry, eps1: float):
    """(A1, A2, A4) of the pre-interpolation differential inequality."""
    a, c, k, m, s = params.a, params.c, params.k, params.m, params.s
    rho0, d, vol = geom.rho0, geom.d, geom.volume
    a1 = a * (m - 2.0) * s * vol + 3.0 * m * m * s * k / (2.0 * rho0)
    a2 = (
        2.0 * a * s * vol
        + 3.0 * m * m * s * k / (2.0 * rho0)
        + 5.0 * m**3 * s * s * k * d / (8.0 * rho0 * eps1)
    )
    a4 = 5.0 * m * d * k * eps1 / (2.0 * rho0) - c / (m * s)
    return a1, a2, a4


def _check_eps1(params: ProblemParams, geom: DomainGeometry, eps1: float) -> float:
    eps_max = eps1_admissible_max(params, geom)
    if not 0.0 < eps1 < eps_max:
        raise RegimeError(
            f"eps1 = {eps1} outside the admissible interval (0, {eps_max})"
        )
    return eps_max


def _eps3_and_c5(params: ProblemParams, geom: DomainGeometry, c2: float, c3: float,
                 top_weight: float) -> tuple[float, float]:
    """Young split of phi^{3/2}; top_weight is 4 (3-D, phi^3) or 2 (2-D, phi^2).

    eps3 zeroes the coefficient of phi^{(ms+q-1)/ms}; the leftover portion
    of c2 lands on the top power and joins c3 to form c5.
    """
    b, q, m, s = params.b, params.q, params.m, params.s
    ms = m * s
    denom = top_weight * ms - 2.0 * q + 2.0
    high_share = (ms - 2.0 * q + 2.0) / denom
    vol_pow = geom.volume ** ((1.0 - q) / ms)
    eps3 = (b * denom * vol_pow / ((top_weight - 1.0) * c2)) ** ((top_weight - 1.0) * ms / denom)
    c5 = c2 * high_share * eps3 ** (-denom / (ms - 2.0 * q + 2.0)) + c3
    return eps3, c5


def constants_3d(params: ProblemParams, geom: DomainGeometry, eps1: float) -> ConstantsLedger:
    """Full 3-D constants ledger for a fixed admissible eps1."""
    if not classify(params, geom.dimension).blowup_bound_3d:
        raise RegimeError("constants_3d requires the 3-D blow-up regime")
    eps_max = _check_eps1(params, geom, eps1)
    a1, a2, a4 = _shared_terms(params, geom, eps1)
    rho0, d = geom.rho0, geom.d

    shape32 = (1.0 + d / rho0) ** 1.5
    c4_slope = a2 * 0.75 * _SQRT2 * shape32
    if a4 >= 0.0 or c4_slope <= 0.0:
        raise InfeasibilityError(
            "no eps2 > 0 can make c4 vanish for this eps1 (gradient budget exhausted)"
        )
    eps2 = -a4 / c4_slope

    c1 = a1
    c2 = a2 * 3.0**1.5 / (2.0 * rho0**1.5)
    c3 = a2 * _SQRT2 * shape32 / (4.0 * eps2**3)
    c4 = c4_slope * eps2 + a4
    eps3, c5 = _eps3_and_c5(params, geom, c2, c3, top_weight=4.0)
    return ConstantsLedger(
        VARIANT_3D, params, geom, c1=c1, c2=c2, c3=c3, c4=c4, c5=c5,
        epsilons=EpsilonChoice(eps1, eps2, eps3, eps_max),
    )


def constants_2d(params: ProblemParams, geom: DomainGeometry, eps1: float) -> ConstantsLedger:
    """Full 2-D (barred) constants ledger for a fixed admissible eps1."""
    if not classify(params, geom.dimension).blowup_bound_2d:
        raise RegimeError("constants_2d requires the 2-D blow-up regime")
    eps_max = _check_eps1(params, geom, eps1)
    a1, a2, a4 = _shared_terms(params, geom, eps1)
    rho0, d = geom.rho0, geom.d

    c4_curv = a2 * _SQRT2 * (d + rho0) / (4.0 * rho0)
    if a4 >= 0.0 or c4_curv <= 0.0:
        raise InfeasibilityError(
            "no eps2 > 0 can make c4 vanish for this eps1 (gradient budget exhausted)"
        )
    eps2 = math.sqrt(-a4 / c4_curv)

    c1 = a1
    c2 = a2 * _SQRT2 / (2.0 * rho0)
    c3 = a2 * _SQRT2 * (d + rho0) / (4.0 * rho0 * eps2 * eps2)
    c4 = c4_curv * eps2 * eps2 + a4
    eps3, c5 = _eps3_and_c5(params, geom, c2, c3, top_weight=2.0)
    upsilon = 4.0 * c1 * c3 - c2 * c2
    return ConstantsLedger(
        VARIANT_2D, params, geom, c1=c1, c2=c2, c3=c3, c4=c4, c5=c5, upsilon=upsilon,
        epsilons=EpsilonChoice(eps1, eps2, eps3, eps_max),
    )


def recomputed_c4(ledger: ConstantsLedger) -> float:
    """Re-evaluate c4 from the stored epsilon choice (should be ~0)."""
    if ledger.epsilons is None:
        raise RegimeError("ledger has no epsilon choice")
    params, geom = ledger.params, ledger.geometry
    eps1, eps2 = ledger.epsilons.eps1, ledger.epsilons.eps2
    _, a2, a4 = _shared_terms(params, geom, eps1)
    rho0, d = geom.rho0, geom.d
    if ledger.variant == VARIANT_3D:
        return a2 * 0.75 * _SQRT2 * (1.0 + d / rho0) ** 1.5 * eps2 + a4
    if ledger.variant == VARIANT_2D:
        return a2 * _SQRT2 * (d + rho0) * eps2 * eps2 / (4.0 * rho0) + a4
    raise RegimeError(f"variant {ledger.variant} has no c4")


def comparison_ode_blowup(c_lin: float, c_pow: float, exponent: int, phi0: float) -> float:
    """Exact blow-up time of phi' = c_lin phi + c_pow phi^exponent, phi(0) = phi0."""
    if c_lin <= 0.0 or c_pow <= 0.0 or phi0 <= 0.0:
        raise RegimeError("comparison ODE needs positive c_lin, c_pow, phi0")
    if exponent == 3:
        return math.log1p(c_lin / (c_pow * phi0 * phi0)) / (2.0 * c_lin)
    if exponent == 2:
        return math.log1p(c_lin / (c_pow * phi0)) / c_lin
    raise RegimeError(f"unsupported comparison exponent {exponent}")


def lower_bound_3d(ledger: ConstantsLedger, phi0: float) -> BoundResult:
    """T = log1p((c1/c5) phi0^{-2}) / (2 c1)."""
    if ledger.variant != VARIANT_3D:
        raise RegimeError("lower_bound_3d needs a thm1-3d ledger")
    if phi0 <= 0.0:
        raise RegimeError("phi0 must be positive")
    value = comparison_ode_blowup(ledger.c1, ledger.c5, 3, phi0)
    return BoundResult(ledger, phi0, value, FORMULA_CLOSED_3D)


def lower_bound_2d(ledger: ConstantsLedger, phi0: float) -> BoundResult:
    """T = log1p((c1/c5) phi0^{-1}) / c1 with the barred constants."""
    if ledger.variant != VARIANT_2D:
        raise RegimeError("lower_bound_2d needs a thm2-2d ledger")
    if phi0 <= 0.0:
        raise RegimeError("phi0 must be positive")
    value = comparison_ode_blowup(ledger.c1, ledger.c5, 2, phi0)
    return BoundResult(ledger, phi0, value, FORMULA_CLOSED_2D)


def _adaptive_simpson(f, a: float, b: float, abs_tol: float, rel_tol: float = 1e-11,
                      max_depth: int = 60) -> float:
    """Adaptive Simpson with Richardson acceptance; tolerance is the tighter
    of abs_tol and rel_tol * |whole-interval estimate|."""

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) * (f0 + 4.0 * f1 + f2) / 6.0

    m0 = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m0), f(b)
    whole = simpson(a, b, fa, fm, fb)
    tol = min(abs_tol, rel_tol * abs(whole)) if whole != 0.0 else abs_tol

    # iterative stack: (a, m, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, m0, b, fa, fm, fb, whole, max(tol, 1e-300), 0)]
    total = 0.0
    while stack:
        x0, x1, x2, f0, f1, f2, s, t, depth = stack.pop()
        lm = 0.5 * (x0 + x1)
        rm = 0.5 * (x1 + x2)
        flm, frm = f(lm), f(rm)
        left = simpson(x0, x1, f0, flm, f1)
        right = simpson(x1, x2, f1, frm, f2)
        err = left + right - s
        if abs(err) <= 15.0 * t:
            total += left + right + err / 15.0
        elif depth >= max_depth:
            raise QuadratureError(
                f"adaptive Simpson failed to converge to {abs_tol} on [{a}, {b}]"
            )
        else:
            stack.append((x0, lm, x1, f0, flm, f1, left, 0.5 * t, depth + 1))
            stack.append((x1, rm, x2, f1, frm, f2, right, 0.5 * t, depth + 1))
    return total


def lower_bound_3d_quadrature(ledger: ConstantsLedger, phi0: float) -> BoundResult:
    """Quadrature of int_{phi0}^inf dtau / (c1 tau + c2 tau^{3/2} + c5 tau^3).

    The substitution tau = phi0/sigma maps the improper integral onto
    sigma in (0, 1] with the smooth integrand

        g(sigma) = phi0 sigma / (c5 phi0^3 + c2 phi0^{3/2} sigma^{3/2} + c1 phi0 sigma^2),

    which vanishes at sigma = 0, so the analytic 1/(2 c5 tau_max^2)-type
    tail is carried exactly rather than truncated.
    """
    if ledger.variant != VARIANT_3D:
        raise RegimeError("lower_bound_3d_quadrature needs a thm1-3d ledger")
    if phi0 <= 0.0:
        raise RegimeError("phi0 must be positive")
    c1, c2, c5 = ledger.c1, ledger.c2, ledger.c5
    k3 = c5 * phi0**3
    k2 = c2 * phi0**1.5
    k1 = c1 * phi0

    def g(sigma: float) -> float:
        if sigma <= 0.0:
            return 0.0
        return phi0 * sigma / (k3 + k2 * sigma**1.5 + k1 * sigma * sigma)

    value = _adaptive_simpson(g, 0.0, 1.0, abs_tol=1e-10)
    return BoundResult(ledger, phi0, value, FORMULA_QUAD_3D)


def _upsilon_positive_time(c1: float, c2: float, c3: float, phi0: float) -> float:
    ups = 4.0 * c1 * c3 - c2 * c2
    root = math.sqrt(ups)
    sq = math.sqrt(phi0)
    arc = math.atan((c2 + 2.0 * c3 * sq) / root)
    log_term = math.log(c3 * phi0 / (c1 + c2 * sq + c3 * phi0))
    return -(c2 * math.pi - 2.0 * c2 * arc) / (c1 * root) - log_term / c1


def _upsilon_zero_time(c1: float, c3: float, phi0: float) -> float:
    # integrand 1/(tau (sqrt(c1) + sqrt(c3 tau))^2); x = sqrt(tau) gives
    # T = (1/c1) log((sqrt(c1) + sqrt(c3 phi0))^2 / (c3 phi0))
    #     - 2 / (sqrt(c1) (sqrt(c1) + sqrt(c3 phi0)))
    ra = math.sqrt(c1)
    rb = math.sqrt(c3 * phi0)
    return math.log((ra + rb) ** 2 / (c3 * phi0)) / c1 - 2.0 / (ra * (ra + rb))


def lower_bound_2d_quadrature(ledger: ConstantsLedger, phi0: float) -> BoundResult:
    """The 2-D three-term bound: closed form when Upsilon >= 0, else quadrature."""
    if ledger.variant != VARIANT_2D:
        raise RegimeError("lower_bound_2d_quadrature needs a thm2-2d ledger")
    if phi0 <= 0.0:
        raise RegimeError("phi0 must be positive")
    c1, c2, c3 = ledger.c1, ledger.c2, ledger.c3
    ups = 4.0 * c1 * c3 - c2 * c2
    scale = max(4.0 * c1 * c3, c2 * c2)
    if abs(ups) <= 1e-12 * scale:
        return BoundResult(ledger, phi0, _upsilon_zero_time(c1, c3, phi0), FORMULA_2D_UPS_ZERO)
    if ups > 0.0:
        return BoundResult(
            ledger, phi0, _upsilon_positive_time(c1, c2, c3, phi0), FORMULA_2D_UPS_POS
        )
    k2c = c3 * phi0 * phi0
    k15 = c2 * phi0**1.5
    k1 = c1 * phi0

    def g(sigma: float) -> float:
        return phi0 / (k2c + k15 * math.sqrt(sigma) + k1 * sigma)

    value = _adaptive_simpson(g, 0.0, 1.0, abs_tol=1e-10)
    return BoundResult(ledger, phi0, value, FORMULA_QUAD_2D)


def global_ceiling(params: ProblemParams, geom: DomainGeometry, psi0: float) -> BoundResult:
    """Ceiling C = max{psi0, |Omega| (M1/M2)^{2/(q-p)}} for psi(t) = int u^2."""
    if not classify(params, geom.dimension).global_existence:
        raise RegimeError("global_ceiling requires the global-existence regime")
    if psi0 <= 0.0:
        raise RegimeError("psi0 must be positive")
    a, b, k, m, p, q = params.a, params.b, params.k, params.m, params.p, params.q
    rho0, d, vol, N = geom.rho0, geom.d, geom.volume, geom.dimension

    sigma = k * d * (p + 1.0) * (m + 1.0) / (4.0 * rho0)
    alpha = (q + m - 2.0 * p) / (q - p)
    msig = 8.0 * m * sigma * sigma / (m + 1.0) ** 2
    eps = b / (msig * (1.0 - alpha)) if msig > 0.0 else math.inf
    if math.isinf(eps):
        # k = 0 would be rejected by classify already; guard kept for safety
        raise RegimeError("degenerate sigma: flux coefficient k must be positive")
    m1 = 2.0 * k * N * m / rho0 + 2.0 * a * vol + msig * alpha * eps ** ((alpha - 1.0) / alpha)
    m2 = 2.0 * b - msig * (1.0 - alpha) * eps
    value = max(psi0, vol * (m1 / m2) ** (2.0 / (q - p)))
    ledger = ConstantsLedger(
        VARIANT_GLOBAL, params, geom,
        sigma=sigma, alpha=alpha, eps_global=eps, M1=m1, M2=m2,
    )
    return BoundResult(ledger, psi0, value, FORMULA_GLOBAL)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, rel_tol: float) -> tuple[float, float]:
    """Golden-section maximization of f on [lo, hi]; ties drift to smaller x."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while (hi - lo) > rel_tol * max(abs(lo), abs(hi)):
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
    x = 0.5 * (lo + hi)
    return x, f(x)


def optimize_eps1(params: ProblemParams, geom: DomainGeometry, phi0: float,
                  variant: str) -> BoundResult:
    """Maximize the closed-form T over admissible eps1.

    A 100-point grid over (delta, eps1_max - delta), delta = 1e-6 eps1_max,
    anchors the search; golden-section refinement (relative width 1e-8) runs
    on the whole interval when the grid profile is unimodal, otherwise on
    the bracket around the best grid point.  The returned bound never falls
    below any grid sample; ties break toward smaller eps1.
    """
    if phi0 <= 0.0:
        raise RegimeError("phi0 must be positive")
    if variant == VARIANT_3D:
        make, bound = constants_3d, lower_bound_3d
    elif variant == VARIANT_2D:
        make, bound = constants_2d, lower_bound_2d
    else:
        raise RegimeError(f"optimize_eps1 does not apply to variant {variant!r}")

    eps_max = eps1_admissible_max(params, geom)
    delta = 1e-6 * eps_max
    lo, hi = delta, eps_max - delta

    def t_of(eps1: float) -> float:
        try:
            return bound(make(params, geom, eps1), phi0).value
        except (InfeasibilityError, RegimeError, OverflowError, ZeroDivisionError):
            return -math.inf

    grid = [lo + (hi - lo) * i / 99.0 for i in range(100)]
    values = [t_of(x) for x in grid]
    best_i = max(range(100), key=lambda i: (values[i], -grid[i]))
    if values[best_i] == -math.inf:
        raise InfeasibilityError("no admissible eps1 produced a finite bound")

    diffs = [values[i + 1] - values[i] for i in range(99)]
    sign_flips = sum(
        1 for i in range(98) if diffs[i] > 0 > diffs[i + 1] or diffs[i] < 0 < diffs[i + 1]
    )
    if sign_flips <= 1:
        g_lo, g_hi = lo, hi
    else:
        g_lo = grid[max(best_i - 1, 0)]
        g_hi = grid[min(best_i + 1, 99)]
    x_gold, t_gold = _golden_max(t_of, g_lo, g_hi, rel_tol=1e-8)

    candidates = [(values[best_i], -grid[best_i], grid[best_i])]
    if math.isfinite(t_gold):
        candidates.append((t_gold, -x_gold, x_gold))
    _, _, eps_best = max(candidates)
    return bound(make(params, geom, eps_best), phi0)


def all_bounds(params: ProblemParams, geom: DomainGeometry, phi0: float,
               psi0: float) -> list[BoundResult]:
    """Every bound variant applicable to (params, geom): optimized closed
    form plus its quadrature companion for blow-up regimes, or the global
    ceiling."""
    verdict = classify(params, geom.dimension)
    results: list[BoundResult] = []
    if verdict.blowup_bound_3d:
        best = optimize_eps1(params, geom, phi0, VARIANT_3D)
        results.append(best)
        results.append(lower_bound_3d_quadrature(best.ledger, phi0))
    if verdict.blowup_bound_2d:
        best = optimize_eps1(params, geom, phi0, VARIANT_2D)
        results.append(best)
        results.append(lower_bound_2d_quadrature(best.ledger, phi0))
    if verdict.global_existence:
        results.append(global_ceiling(params, geom, psi0))
    return results


def with_eps1(result: BoundResult, eps1: float) -> BoundResult:
    """Same bound recomputed at a different eps1 (diagnostic helper)."""
    ledger = result.ledger
    if ledger.variant == VARIANT_3D:
        return lower_bound_3d(constants_3d(ledger.params, ledger.geometry, eps1), result.phi0)
    if ledger.variant == VARIANT_2D:
        return lower_bound_2d(constants_2d(ledger.params, ledger.geometry, eps1), result.phi0)
    raise RegimeError("with_eps1 applies to blow-up variants only")
