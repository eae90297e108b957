"""Point estimators of the selected-arm mean.

Each public estimator takes an :class:`RBSummary` and the design. The
``*_value`` functions below them work on plain floats; the pure-Python batch
kernel calls them directly and the compiled kernel mirrors them line by line.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Optional

from . import specfun
from .errors import DegenerateData
from .model import DesignConfig, RBSummary

_LOG2 = math.log(2.0)
V_STAR_FLOOR = 1e-10


class Kind(enum.IntEnum):
    MLE = 0
    UMVCUE = 1
    PLUGIN_U1 = 2
    PLUGIN_U2 = 3
    BAYES_M = 4


@dataclass(frozen=True, order=True)
class EstimatorId:
    kind: Kind
    m: Optional[int] = None

    def __post_init__(self):
        if self.kind is Kind.BAYES_M:
            if self.m is None or isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
                raise ValueError(f"BAYES_M needs an integer m >= 1, got {self.m!r}")
            object.__setattr__(self, "m", int(self.m))
        elif self.m is not None:
            raise ValueError(f"{self.kind.name} takes no m")

    @property
    def label(self) -> str:
        if self.kind is Kind.BAYES_M:
            return f"BAYES_M({self.m})"
        return self.kind.name

    def __str__(self):
        return self.label

    @classmethod
    def parse(cls, text: str) -> "EstimatorId":
        """Parse ``MLE``, ``UMVCUE``, ``PLUGIN_U1``, ``PLUGIN_U2`` or ``BAYES_M(m)``."""
        token = text.strip().upper()
        match = re.fullmatch(r"BAYES_M(?:\((\d+)\)|[:=](\d+))?", token)
        if match:
            m = match.group(1) or match.group(2) or "1"
            return cls(Kind.BAYES_M, int(m))
        try:
            return cls(Kind[token])
        except KeyError:
            raise ValueError(f"unknown estimator {text!r}") from None


MLE = EstimatorId(Kind.MLE)
UMVCUE = EstimatorId(Kind.UMVCUE)
PLUGIN_U1 = EstimatorId(Kind.PLUGIN_U1)
PLUGIN_U2 = EstimatorId(Kind.PLUGIN_U2)
PAPER_FOUR = (MLE, UMVCUE, PLUGIN_U1, PLUGIN_U2)


def bayes(m: int) -> EstimatorId:
    return EstimatorId(Kind.BAYES_M, m)


# -- scalar cores -----------------------------------------------------------


def umvcue_correction(v_star: float, c: float) -> float:
    """Conditional mean of the standardized stage-2 deviation given the
    sufficient statistic: the ratio of int u(1-u^2)^(c-1) to int (1-u^2)^(c-1)
    over (-1, v_star), in closed form through I_{c,c}.

    Evaluated in log space; zero at v_star = 1 and bounded by -1 below.
    """
    if v_star >= 1.0:
        return 0.0
    if v_star + 1.0 < V_STAR_FLOOR:
        raise DegenerateData(f"v_star = {v_star!r} too close to -1")
    log_num = c * math.log1p(-v_star * v_star)
    log_den = (2.0 * c * _LOG2 + math.log(c) + specfun.log_beta(c, c)
               + specfun.log_reg_inc_beta(c, c, 0.5 * (v_star + 1.0)))
    return -math.exp(log_num - log_den)


def mle_value(z1: float) -> float:
    return z1


def umvcue_value(z1: float, s_tilde: float, v_star: float, c: float, n1: int, n2: int) -> float:
    scale = math.sqrt(n1 / (n2 * (n1 + n2))) * s_tilde
    return z1 + scale * umvcue_correction(v_star, c)


def _sigma1(s_pooled: float, n1: int, n2: int) -> float:
    if not s_pooled > 0.0:
        raise DegenerateData("pooled variance is zero")
    return math.sqrt(n2 / (n1 * (n1 + n2))) * s_pooled


def plugin_u1_value(z1: float, z2: float, s_pooled: float, n1: int, n2: int) -> float:
    sig = _sigma1(s_pooled, n1, n2)
    return z1 + sig * specfun.mills_hazard((z1 - z2) / sig)


def plugin_u2_value(z1: float, z2: float, s_pooled: float, n1: int, n2: int) -> float:
    sig = _sigma1(s_pooled, n1, n2)
    n_all = 2 * n1 + n2
    pooled_mean = ((n1 + n2) * z1 + n1 * z2) / n_all
    if z1 <= z2:
        return pooled_mean
    t = (z1 - z2) / sig
    a = n1 * (z1 - z2) / (n_all * sig)
    cdf_t = specfun.norm_cdf(t)
    cdf_a = specfun.norm_cdf(a)
    return (pooled_mean * (cdf_t - cdf_a) / cdf_t
            + (sig * specfun.norm_pdf(a) + z1 * cdf_a) / cdf_t)


def bayes_value(z: float, n1: int, n2: int, m: int) -> float:
    return z / (n1 + n2 + 1.0 / m)


# -- public estimators ------------------------------------------------------


def mle(s: RBSummary, cfg: DesignConfig) -> float:
    return s.z / (cfg.n1 + cfg.n2)


def umvcue(s: RBSummary, cfg: DesignConfig) -> float:
    return umvcue_value(s.z / (cfg.n1 + cfg.n2), s.s_tilde, s.v_star, s.c, cfg.n1, cfg.n2)


def plugin_u1(s: RBSummary, cfg: DesignConfig) -> float:
    return plugin_u1_value(s.z / (cfg.n1 + cfg.n2), s.xbar_other, s.s_pooled, cfg.n1, cfg.n2)


def plugin_u2(s: RBSummary, cfg: DesignConfig) -> float:
    return plugin_u2_value(s.z / (cfg.n1 + cfg.n2), s.xbar_other, s.s_pooled, cfg.n1, cfg.n2)


def bayes_shrinkage(s: RBSummary, cfg: DesignConfig, m: int = 1) -> float:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return bayes_value(s.z, cfg.n1, cfg.n2, m)


def evaluate(est: EstimatorId, s: RBSummary, cfg: DesignConfig) -> float:
    if est.kind is Kind.MLE:
        return mle(s, cfg)
    if est.kind is Kind.UMVCUE:
        return umvcue(s, cfg)
    if est.kind is Kind.PLUGIN_U1:
        return plugin_u1(s, cfg)
    if est.kind is Kind.PLUGIN_U2:
        return plugin_u2(s, cfg)
    return bayes_shrinkage(s, cfg, est.m)


def evaluate_all(estimators, s: RBSummary, cfg: DesignConfig) -> dict:
    return {est.label: evaluate(est, s, cfg) for est in estimators}
