"""Monte-Carlo risk and bias studies.

Replications are generated in fixed-size chunks. Chunk ``k`` of grid point
``g`` draws from its own PCG64 stream seeded by ``SeedSequence(seed,
spawn_key=(g, k))``, so results do not depend on how chunks are spread over
workers. Partial moments are merged in chunk order. Every estimator sees the
same replications (common random numbers).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _backend
from .errors import DegenerateData, EmptyGrid, InvalidDesign
from .estimators import PAPER_FOUR, EstimatorId
from .model import DesignConfig, ParameterPoint, RBSummary, summary_from_stats

CHUNK_SIZE = 8192
DEFAULT_REPS = 100_000
DEFAULT_MU_GRID = tuple(round(0.2 * i, 10) for i in range(16))
WORKERS_ENV = "TWOSTAGE_WORKERS"


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return value
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SimulationJob:
    cfg: DesignConfig
    params: ParameterPoint
    reps: int
    seed: int
    estimators: tuple = PAPER_FOUR

    def __post_init__(self):
        if isinstance(self.reps, bool) or not isinstance(self.reps, (int, np.integer)) or self.reps < 1:
            raise ValueError(f"reps must be a positive integer, got {self.reps!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        ests = tuple(self.estimators)
        if not ests:
            raise ValueError("estimator list is empty")
        if len(set(ests)) != len(ests):
            raise ValueError("estimator list has duplicates")
        object.__setattr__(self, "estimators", ests)


@dataclass(frozen=True)
class EstimatorRisk:
    scaled_mse: float
    scaled_mse_se: float
    scaled_bias: float
    scaled_bias_se: float


@dataclass
class RiskReport:
    estimators: dict
    reps_used: int
    mu_norm: float
    cfg: DesignConfig | None = None
    params: ParameterPoint | None = None
    seed: int | None = None

    def __getitem__(self, est) -> EstimatorRisk:
        return self.estimators[str(est)]

    def to_dict(self) -> dict:
        out = {
            "mu_norm": self.mu_norm,
            "reps_used": self.reps_used,
            "estimators": {k: vars(v).copy() for k, v in self.estimators.items()},
        }
        if self.cfg is not None:
            out["design"] = {"n1": self.cfg.n1, "n2": self.cfg.n2}
        if self.params is not None:
            out["params"] = {"mu1": self.params.mu1, "mu2": self.params.mu2,
                             "sigma": self.params.sigma}
        if self.seed is not None:
            out["provenance"] = {"seed": self.seed, "reps": self.reps_used}
        return out


@dataclass
class SweepResult:
    axis: str
    grid: list
    reports: list = field(default_factory=list)

    def rows(self):
        """Rows ``(axis, estimator, scaled_mse, mse_se, scaled_bias, bias_se)``
        sorted by axis value then estimator."""
        out = []
        for x, rep in zip(self.grid, self.reports):
            for label in sorted(rep.estimators, key=lambda s: EstimatorId.parse(s)):
                r = rep.estimators[label]
                out.append((x, label, r.scaled_mse, r.scaled_mse_se, r.scaled_bias, r.scaled_bias_se))
        out.sort(key=lambda row: (row[0], EstimatorId.parse(row[1])))
        return out

    def series(self, est, attr="scaled_mse") -> np.ndarray:
        return np.array([getattr(rep[est], attr) for rep in self.reports])


# -- replication machinery ----------------------------------------------------


def chunk_stream(seed: int, grid_index: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(grid_index), int(chunk_index)))
    return np.random.Generator(np.random.PCG64(ss))


def _group_stats(block: np.ndarray):
    mean = block.mean(axis=1)
    dev = block - mean[:, None]
    return mean, np.einsum("ij,ij->i", dev, dev)


def _batch_stats(noise: np.ndarray, params: ParameterPoint, cfg: DesignConfig):
    """Turn standard-normal draws into per-replication group statistics.

    Row layout is ``[arm1 (n1), arm2 (n1), stage2 (n2)]``; the stage-2 draws
    are shifted by the mean of whichever arm the rule selects.
    """
    n1 = cfg.n1
    sigma = params.sigma
    arm1 = params.mu1 + sigma * noise[:, :n1]
    arm2 = params.mu2 + sigma * noise[:, n1:2 * n1]
    xbar1, ss1 = _group_stats(arm1)
    xbar2, ss2 = _group_stats(arm2)
    q1 = xbar1 > xbar2
    mu_q = np.where(q1, params.mu1, params.mu2)
    stage2 = mu_q[:, None] + sigma * noise[:, 2 * n1:]
    ybar, ssy = _group_stats(stage2)
    within = (np.where(q1, ss1, ss2) + np.where(q1, ss2, ss1)) + ssy
    return xbar1, xbar2, ybar, within, mu_q


def draw_noise(stream: np.random.Generator, cfg: DesignConfig, count: int) -> np.ndarray:
    return stream.standard_normal((count, 2 * cfg.n1 + cfg.n2))


def run_replication(params: ParameterPoint, cfg: DesignConfig,
                    stream: np.random.Generator) -> tuple[RBSummary, float]:
    """One replication: returns its summary and the realized selected mean."""
    xbar1, xbar2, ybar, within, mu_q = _batch_stats(draw_noise(stream, cfg, 1), params, cfg)
    s = summary_from_stats(float(xbar1[0]), float(xbar2[0]), float(ybar[0]), float(within[0]), cfg)
    return s, float(mu_q[0])


def _kernel_args(estimators):
    kinds = np.array([int(e.kind) for e in estimators], dtype=np.int_)
    ms = np.array([e.m or 0 for e in estimators], dtype=np.int_)
    return kinds, ms


def _chunk_bounds(reps: int):
    return [(k, k * CHUNK_SIZE, min(reps, (k + 1) * CHUNK_SIZE))
            for k in range((reps + CHUNK_SIZE - 1) // CHUNK_SIZE)]


def _run_chunk(job: SimulationJob, grid_index: int, chunk_index: int, start: int, stop: int, kernel):
    stream = chunk_stream(job.seed, grid_index, chunk_index)
    stats = _batch_stats(draw_noise(stream, job.cfg, stop - start), job.params, job.cfg)
    kinds, ms = _kernel_args(job.estimators)
    try:
        q, est = kernel.estimate_batch(*stats[:4], job.cfg.n1, job.cfg.n2, kinds, ms)
    except DegenerateData as exc:
        local = exc.replication or 0
        raise DegenerateData("degenerate simulated data", replication=start + local) from None
    return q, est, stats[4]


def iter_chunks(job: SimulationJob, grid_index: int = 0, workers: int | None = None,
                backend: str | None = None) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield ``(q, estimates, mu_q)`` per chunk, in chunk order."""
    kernel = _backend.get_kernel(backend)
    bounds = _chunk_bounds(job.reps)
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or len(bounds) == 1:
        for k, a, b in bounds:
            yield _run_chunk(job, grid_index, k, a, b, kernel)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(lambda kb: _run_chunk(job, grid_index, *kb, kernel), bounds)


class _Moments:
    """Count, mean and centred second moment, merged in a fixed order."""

    def __init__(self, size):
        self.n = 0
        self.mean = np.zeros(size)
        self.m2 = np.zeros(size)

    def add(self, values: np.ndarray):
        # values: (size, count)
        nb = values.shape[1]
        mb = values.mean(axis=1)
        m2b = ((values - mb[:, None]) ** 2).sum(axis=1)
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2b + delta * delta * (self.n * nb / n)
        self.n = n

    def se(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


def estimate_risk(job: SimulationJob, workers: int | None = None, grid_index: int = 0,
                  backend: str | None = None) -> RiskReport:
    k = len(job.estimators)
    err_m = _Moments(k)
    sq_m = _Moments(k)
    for _, est, mu_q in iter_chunks(job, grid_index, workers, backend):
        err = (est - mu_q[None, :]) / job.params.sigma
        err_m.add(err)
        sq_m.add(err * err)
    mse_se, bias_se = sq_m.se(), err_m.se()
    risks = {
        e.label: EstimatorRisk(float(sq_m.mean[i]), float(mse_se[i]),
                               float(err_m.mean[i]), float(bias_se[i]))
        for i, e in enumerate(job.estimators)
    }
    return RiskReport(risks, job.reps, job.params.mu_norm, job.cfg, job.params, int(job.seed))


def paired_mse_difference(job: SimulationJob, first: EstimatorId, second: EstimatorId,
                          workers: int | None = None, grid_index: int = 0) -> tuple[float, float]:
    """Mean and standard error of the per-replication difference of scaled
    squared errors, ``first`` minus ``second``, on common replications."""
    ests = list(job.estimators)
    i, j = ests.index(first), ests.index(second)
    acc = _Moments(1)
    for _, est, mu_q in iter_chunks(job, grid_index, workers):
        e = (est - mu_q[None, :]) / job.params.sigma
        acc.add((e[i] ** 2 - e[j] ** 2)[None, :])
    return float(acc.mean[0]), float(acc.se()[0])


def sweep_mu(cfg: DesignConfig, mu_grid: Sequence[float], reps: int = DEFAULT_REPS, seed: int = 0,
             estimators=PAPER_FOUR, workers: int | None = None) -> SweepResult:
    grid = [float(m) for m in mu_grid]
    if not grid:
        raise EmptyGrid("mu grid is empty")
    if any(not math.isfinite(m) or m < 0 for m in grid):
        raise ValueError("mu grid values must be finite and >= 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("mu grid must be strictly increasing")
    result = SweepResult("mu_norm", grid)
    for g, mu in enumerate(grid):
        job = SimulationJob(cfg, ParameterPoint(0.0, mu, 1.0), reps, seed, tuple(estimators))
        result.reports.append(estimate_risk(job, workers, grid_index=g))
    return result


def admissible_splits(n_total: int) -> list[DesignConfig]:
    out = []
    for n1 in range(1, n_total):
        try:
            out.append(DesignConfig(n1, n_total - n1))
        except InvalidDesign:
            continue
    return out


def sweep_information_fraction(n_total: int, mu_norm: float, reps: int = DEFAULT_REPS, seed: int = 0,
                               estimators=PAPER_FOUR, workers: int | None = None) -> SweepResult:
    if not (math.isfinite(mu_norm) and mu_norm >= 0):
        raise ValueError("mu_norm must be finite and >= 0")
    splits = admissible_splits(int(n_total))
    if not splits:
        raise EmptyGrid(f"no admissible (n1, n2) split of n = {n_total}")
    result = SweepResult("information_fraction", [cfg.n1 / n_total for cfg in splits])
    params = ParameterPoint(0.0, float(mu_norm), 1.0)
    for cfg in splits:
        job = SimulationJob(cfg, params, reps, seed, tuple(estimators))
        result.reports.append(estimate_risk(job, workers, grid_index=cfg.n1))
    return result
