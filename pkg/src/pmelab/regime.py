"""Parameter records and classification against the bound hypotheses.

Three machineries exist, each with strict hypotheses on (m, p, q):

* 3-D blow-up bound:   dimension 3, q > 3/2, p > q, m in (2, 8/(5-p)) when
  3/2 < p < 5 (m > 2 suffices for p >= 5), and the boundary-flux exponent
  beta = m(p-1)/4 - m + 2 must be positive.
* 2-D blow-up bound:   the same conditions with dimension 2.
* global-existence ceiling: q > p > m > 1 and 2p < m + q, any dimension,
  with flux exponent beta = p - m + 1.

Strict inequalities are evaluated exactly as written (q = 3/2 fails
q > 3/2); no tolerance band.  Parameter sets outside all three regimes are
NotCovered and never extrapolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, RegimeError

BLOWUP_3D = "blowup-bound-3d"
BLOWUP_2D = "blowup-bound-2d"
GLOBAL = "global-existence"
NOT_COVERED = "not-covered"


@dataclass(frozen=True)
class ProblemParams:
    """Equation coefficients a, b, c, k (>= 0) and exponents m, p, q (> 1).

    The bound machineries require strictly positive coefficients; zeros are
    accepted here so that reduced problems (pure porous-medium runs, zero
    boundary flux) can be simulated, and classify() reports the positivity
    hypotheses as violated instead.
    """

    a: float
    b: float
    c: float
    k: float
    m: float
    p: float
    q: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "k", "m", "p", "q"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConfigurationError(f"parameter {name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.a < 0 or self.b < 0 or self.c < 0 or self.k < 0:
            raise ConfigurationError("coefficients a, b, c, k must be nonnegative")
        if self.m <= 1 or self.p <= 1 or self.q <= 1:
            raise ConfigurationError("exponents m, p, q must be > 1")

    @property
    def s(self) -> float:
        return self.p - 1.0

    @property
    def blowup_flux_exponent(self) -> float:
        return self.m * (self.p - 1.0) / 4.0 - self.m + 2.0

    @property
    def global_flux_exponent(self) -> float:
        return self.p - self.m + 1.0


@dataclass(frozen=True)
class RegimeVerdict:
    blowup_bound_3d: bool
    blowup_bound_2d: bool
    global_existence: bool
    violated_conditions: tuple[str, ...]

    @property
    def not_covered(self) -> bool:
        return not (self.blowup_bound_3d or self.blowup_bound_2d or self.global_existence)

    @property
    def label(self) -> str:
        if self.blowup_bound_3d:
            return BLOWUP_3D
        if self.blowup_bound_2d:
            return BLOWUP_2D
        if self.global_existence:
            return GLOBAL
        return NOT_COVERED


def _positivity_failures(params: ProblemParams) -> list[str]:
    return [f"{name} > 0" for name in ("a", "b", "c", "k") if getattr(params, name) <= 0.0]


def _blowup_failures(params: ProblemParams, dimension: int) -> list[str]:
    m, p, q = params.m, params.p, params.q
    failed = _positivity_failures(params)
    if dimension not in (2, 3):
        failed.append("dimension in {2, 3}")
    if not q > 1.5:
        failed.append("q > 3/2")
    if not p > q:
        failed.append("p > q")
    if p < 5.0:
        if not (2.0 < m < 8.0 / (5.0 - p)):
            failed.append("m in (2, 8/(5-p))")
    else:
        if not m > 2.0:
            failed.append("m > 2")
    if not params.blowup_flux_exponent > 0.0:
        failed.append("beta = m(p-1)/4 - m + 2 > 0")
    return failed


def _global_failures(params: ProblemParams) -> list[str]:
    m, p, q = params.m, params.p, params.q
    failed = _positivity_failures(params)
    if not q > p:
        failed.append("q > p")
    if not p > m:
        failed.append("p > m")
    if not 2.0 * p < m + q:
        failed.append("2p < m + q")
    return failed


def classify(params: ProblemParams, dimension: int) -> RegimeVerdict:
    """Pure classification of (params, dimension) against all hypotheses.

    A verdict is always produced.  When no machinery applies, the failed
    conditions of the nearest family (blow-up when p > q, global when
    q > p) are all named.
    """
    blowup_failed = _blowup_failures(params, dimension)
    global_failed = _global_failures(params)

    blowup_ok = not blowup_failed
    verdict_3d = blowup_ok and dimension == 3
    verdict_2d = blowup_ok and dimension == 2
    verdict_global = not global_failed

    if verdict_3d or verdict_2d or verdict_global:
        violated: tuple[str, ...] = ()
    elif params.p > params.q:
        violated = tuple(blowup_failed)
    elif params.q > params.p:
        violated = tuple(global_failed)
    else:
        violated = ("p > q or q > p",)
    return RegimeVerdict(verdict_3d, verdict_2d, verdict_global, violated)


def flux_exponent(params: ProblemParams, regime: RegimeVerdict) -> float:
    """beta of the active regime (the flux bound is g(xi) <= k xi^beta)."""
    if regime.blowup_bound_3d or regime.blowup_bound_2d:
        return params.blowup_flux_exponent
    if regime.global_existence:
        return params.global_flux_exponent
    raise RegimeError("no active regime: flux exponent undefined")
