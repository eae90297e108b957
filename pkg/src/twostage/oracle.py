"""Independent checks on the estimators.

The quadrature here shares no code with the closed form: it integrates the
conditional density of the standardized stage-2 deviation directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientConditionalSample, ToleranceNotMet
from .estimators import MLE, UMVCUE, EstimatorId, umvcue_correction
from .model import DesignConfig, ParameterPoint
from .simulate import SimulationJob, iter_chunks

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)

V_GRID = (-0.99, -0.9, -0.7, -0.5, -0.3, -0.1, 0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0)
C_GRID = (0.5, 1.0, 1.5, 2.5, 8.5, 48.5)
MIN_CONDITIONAL_REPS = 100


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    max_panels: int = 2**20

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_panels < 1:
            raise ValueError("max_panels must be >= 1")


def _composite_gl(f, lo, hi, panels):
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return float(np.sum(half * (f(x) @ _GL_WEIGHTS)))


def conditional_mean_u_quadrature(v_star: float, c: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Ratio of int_{-1}^{v*} u (1-u^2)^(c-1) du to int_{-1}^{v*} (1-u^2)^(c-1) du.

    With u = sin(t) both integrands become smooth in t on (-pi/2, asin v*):
    sin(t) cos(t)^(2c-1) and cos(t)^(2c-1). Panels double until the ratio
    moves by less than ``abs_tol``.
    """
    if not -1.0 < v_star <= 1.0:
        raise ValueError(f"v_star must lie in (-1, 1], got {v_star!r}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c!r}")
    lo, hi = -0.5 * math.pi, math.asin(v_star)
    power = 2.0 * c - 1.0

    def num(t):
        return np.sin(t) * np.cos(t) ** power

    def den(t):
        return np.cos(t) ** power

    panels = 1
    prev = None
    while panels <= spec.max_panels:
        ratio = _composite_gl(num, lo, hi, panels) / _composite_gl(den, lo, hi, panels)
        if prev is not None and abs(ratio - prev) <= spec.abs_tol and panels >= 4:
            return ratio
        prev = ratio
        panels *= 2
    raise ToleranceNotMet(
        f"quadrature did not reach {spec.abs_tol} within {spec.max_panels} panels "
        f"(v*={v_star}, c={c})"
    )


def closed_form_correction(v_star: float, c: float) -> float:
    """The closed-form conditional mean, via the same path the UMVCUE uses."""
    return umvcue_correction(v_star, c)


@dataclass(frozen=True)
class GridCheck:
    v_star: float
    c: float
    closed_form: float
    quadrature: float
    abs_err: float
    rel_err: float
    passed: bool


def correction_grid_check(v_grid=V_GRID, c_grid=C_GRID, rel_tol=1e-8, abs_tol=1e-12,
                          spec: QuadratureSpec = QuadratureSpec()) -> list[GridCheck]:
    """Compare closed form and quadrature on a grid.

    A point passes if the relative error is within ``rel_tol`` or, where the
    value is near zero, the absolute error is within ``abs_tol``.
    """
    out = []
    for c in c_grid:
        for v in v_grid:
            cf = closed_form_correction(v, c)
            qd = conditional_mean_u_quadrature(v, c, spec)
            abs_err = abs(cf - qd)
            rel_err = abs_err / abs(qd) if qd != 0 else (0.0 if cf == 0 else math.inf)
            out.append(GridCheck(v, c, cf, qd, abs_err, rel_err,
                                 rel_err <= rel_tol or abs_err <= abs_tol))
    return out


@dataclass(frozen=True)
class ArmBias:
    arm: int
    count: int
    bias: float
    se: float

    @property
    def z_score(self) -> float:
        return self.bias / self.se if self.se > 0 else math.inf * np.sign(self.bias)


@dataclass(frozen=True)
class ConditionalReport:
    estimator: str
    arms: dict
    threshold: float = 4.0

    def within(self, arm: int) -> bool:
        return abs(self.arms[arm].z_score) <= self.threshold

    @property
    def passed(self) -> bool:
        return all(self.within(a) for a in self.arms)


def conditional_unbiasedness_check(params: ParameterPoint, cfg: DesignConfig, reps: int, seed: int,
                                   estimator: EstimatorId = UMVCUE, threshold: float = 4.0,
                                   workers: int | None = None,
                                   min_count: int = MIN_CONDITIONAL_REPS) -> ConditionalReport:
    """Simulate, split replications by selected arm, and report the mean of
    estimate minus that arm's true mean with its standard error."""
    if reps < 10_000:
        raise ValueError("conditional unbiasedness check needs reps >= 10^4")
    job = SimulationJob(cfg, params, reps, seed, (estimator,))
    sums = {1: [0, 0.0, 0.0], 2: [0, 0.0, 0.0]}
    for q, est, _ in iter_chunks(job, workers=workers):
        for arm in (1, 2):
            d = est[0, q == arm] - params.mean_of(arm)
            acc = sums[arm]
            acc[0] += d.size
            acc[1] += float(d.sum())
            acc[2] += float((d * d).sum())
    arms = {}
    for arm in (1, 2):
        n, s1, s2 = sums[arm]
        if n < max(min_count, 2):
            raise InsufficientConditionalSample(arm, n, max(min_count, 2))
        mean = s1 / n
        var = max(s2 - n * mean * mean, 0.0) / (n - 1)
        arms[arm] = ArmBias(arm, n, mean / params.sigma, math.sqrt(var / n) / params.sigma)
    return ConditionalReport(estimator.label, arms, threshold)


def mle_selection_bias(params: ParameterPoint, cfg: DesignConfig, reps: int, seed: int,
                       workers: int | None = None) -> ConditionalReport:
    return conditional_unbiasedness_check(params, cfg, reps, seed, MLE, workers=workers)
