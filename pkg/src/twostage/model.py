"""Design and data types, the selection rule and the sufficient reduction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateData,
    InvalidDesign,
    LengthMismatch,
    NonFiniteValue,
    SelectionMismatch,
)

DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class DesignConfig:
    """Per-arm stage-1 size ``n1`` and stage-2 size ``n2``."""

    n1: int
    n2: int

    def __post_init__(self):
        for name in ("n1", "n2"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidDesign(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise InvalidDesign(f"{name} must be >= 1, got {value}")
        if 2 * self.n1 + self.n2 < 4:
            raise InvalidDesign(
                f"2*n1 + n2 must be >= 4 (got n1={self.n1}, n2={self.n2})"
            )

    @property
    def c(self) -> float:
        return (2 * self.n1 + self.n2 - 3) / 2.0

    @property
    def df(self) -> int:
        """Degrees of freedom of the pooled variance."""
        return 2 * self.n1 + self.n2 - 3

    @property
    def information_fraction(self) -> float:
        return self.n1 / (self.n1 + self.n2)


@dataclass(frozen=True)
class ParameterPoint:
    mu1: float
    mu2: float
    sigma: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mu1) and math.isfinite(self.mu2)):
            raise ValueError("means must be finite")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")

    @property
    def mu_norm(self) -> float:
        return abs(self.mu2 - self.mu1) / self.sigma

    def mean_of(self, q: int) -> float:
        return self.mu1 if q == 1 else self.mu2


@dataclass(frozen=True)
class TwoStageDataset:
    arm1: tuple
    arm2: tuple
    stage2: tuple
    q: int

    def __post_init__(self):
        for name in ("arm1", "arm2", "stage2"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @classmethod
    def from_stage_data(cls, arm1: Sequence[float], arm2: Sequence[float],
                        stage2: Sequence[float]) -> "TwoStageDataset":
        """Build a dataset, attaching stage 2 to the arm the rule selects."""
        q = select_arm(float(np.mean(arm1)), float(np.mean(arm2)))
        return cls(arm1, arm2, stage2, q)

    def swapped(self) -> "TwoStageDataset":
        return TwoStageDataset(self.arm2, self.arm1, self.stage2, 3 - self.q)

    def affine(self, shift: float, scale: float) -> "TwoStageDataset":
        def f(xs):
            return tuple(shift + scale * x for x in xs)

        return TwoStageDataset(f(self.arm1), f(self.arm2), f(self.stage2), self.q)


@dataclass(frozen=True)
class RBSummary:
    """Complete-sufficient reduction of one two-stage dataset."""

    q: int
    xbar_q: float
    xbar_other: float
    ybar: float
    z: float
    s_raw_sq: float
    s_tilde_sq: float
    c: float
    v: float
    v_star: float
    s_pooled_sq: float
    d: float
    n1: int = field(default=0, compare=False)
    n2: int = field(default=0, compare=False)

    @property
    def z1(self) -> float:
        """Weighted two-stage mean z / (n1 + n2)."""
        return self.z / (self.n1 + self.n2)

    @property
    def s_tilde(self) -> float:
        return math.sqrt(self.s_tilde_sq)

    @property
    def s_pooled(self) -> float:
        return math.sqrt(self.s_pooled_sq)

    @property
    def u(self) -> float:
        """Standardized stage-2 deviation whose conditional mean drives the UMVCUE."""
        n1, n2 = self.n1, self.n2
        return math.sqrt(n2 * (n1 + n2) / n1) * (self.ybar - self.z1) / self.s_tilde

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "xbar_q": self.xbar_q,
            "xbar_other": self.xbar_other,
            "ybar": self.ybar,
            "z": self.z,
            "s_raw_sq": self.s_raw_sq,
            "s_tilde_sq": self.s_tilde_sq,
            "c": self.c,
            "v": self.v,
            "v_star": self.v_star,
            "s_pooled_sq": self.s_pooled_sq,
            "d": self.d,
        }


def select_arm(xbar1: float, xbar2: float) -> int:
    """Arm 1 iff its stage-1 mean is strictly larger; ties go to arm 2."""
    return 1 if xbar1 > xbar2 else 2


def validate_dataset(data: TwoStageDataset, cfg: DesignConfig) -> None:
    for name, expected in (("arm1", cfg.n1), ("arm2", cfg.n1), ("stage2", cfg.n2)):
        got = len(getattr(data, name))
        if got != expected:
            raise LengthMismatch(f"{name} has {got} observations, design expects {expected}")
    for name in ("arm1", "arm2", "stage2"):
        for i, value in enumerate(getattr(data, name)):
            if not math.isfinite(value):
                raise NonFiniteValue(f"{name}[{i}] is not finite: {value!r}")
    if data.q not in (1, 2):
        raise SelectionMismatch(f"q must be 1 or 2, got {data.q!r}")
    expected_q = select_arm(float(np.mean(data.arm1)), float(np.mean(data.arm2)))
    if data.q != expected_q:
        raise SelectionMismatch(
            f"stage-2 data attached to arm {data.q} but the selection rule picks arm {expected_q}"
        )


def summary_from_stats(xbar1: float, xbar2: float, ybar: float, within_ss: float,
                       cfg: DesignConfig) -> RBSummary:
    """Reduce group means and the pooled within-group sum of squares.

    ``within_ss`` is the sum of squared deviations of every observation
    from its own group mean (both stage-1 arms and stage 2).
    """
    n1, n2 = cfg.n1, cfg.n2
    q = select_arm(xbar1, xbar2)
    xq, xo = (xbar1, xbar2) if q == 1 else (xbar2, xbar1)
    z = n1 * xq + n2 * ybar
    z1 = z / (n1 + n2)
    k = n2 * (n1 + n2) / n1
    s_tilde_sq = within_ss + k * (ybar - z1) ** 2
    s_raw_sq = within_ss + n1 * xq * xq + n1 * xo * xo + n2 * ybar * ybar
    if not s_tilde_sq > DEGENERACY_RTOL * s_raw_sq or s_tilde_sq <= 0.0:
        raise DegenerateData(f"residual sum of squares {s_tilde_sq!r} is degenerate")
    d = z1 - xo
    v = math.sqrt(n1 * (n1 + n2) / n2) * d / math.sqrt(s_tilde_sq)
    if v <= -1.0 + DEGENERACY_RTOL:
        raise DegenerateData(f"V = {v!r} is at or below -1")
    return RBSummary(
        q=q,
        xbar_q=xq,
        xbar_other=xo,
        ybar=ybar,
        z=z,
        s_raw_sq=s_raw_sq,
        s_tilde_sq=s_tilde_sq,
        c=cfg.c,
        v=v,
        v_star=min(v, 1.0),
        s_pooled_sq=within_ss / cfg.df,
        d=d,
        n1=n1,
        n2=n2,
    )


def _mean_ss(values):
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    return mean, float(((arr - mean) ** 2).sum())


def summarize(data: TwoStageDataset, cfg: DesignConfig) -> RBSummary:
    validate_dataset(data, cfg)
    m1, ss1 = _mean_ss(data.arm1)
    m2, ss2 = _mean_ss(data.arm2)
    my, ssy = _mean_ss(data.stage2)
    # selected arm's sum first so that relabelling arms is bit-exact
    ss_q, ss_o = (ss1, ss2) if data.q == 1 else (ss2, ss1)
    return summary_from_stats(m1, m2, my, (ss_q + ss_o) + ssy, cfg)
