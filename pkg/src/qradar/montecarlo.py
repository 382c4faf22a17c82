"""Simulated photon-count experiments and least-squares parameter recovery.

A setting bank with probabilities normalized by their sum defines one
multinomial outcome distribution.  ``N`` counts are drawn from it and the
unknown scalar is recovered by matching model probabilities to the observed
relative frequencies.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .inference import ParametricModel, crb, fisher_matrix

RNG_NAME = "PCG64"
GRID_POINTS = 1000
X_TOL = 1e-6


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_counts(q, N: int, seed: int) -> np.ndarray:
    """Multinomial draw of ``N`` counts over outcome probabilities ``q``."""
    q = np.asarray(q, dtype=float)
    if q.ndim != 1 or q.size == 0 or np.any(~np.isfinite(q)) or np.any(q < 0):
        raise ValueError("q must be a non-empty vector of non-negative probabilities")
    if abs(q.sum() - 1.0) > 1e-12:
        raise ValueError(f"q must sum to 1, got {q.sum()!r}")
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    # numpy insists on sum(q[:-1]) <= 1; renormalizing absorbs the 1e-12 slack
    return make_rng(seed).multinomial(int(N), q / q.sum())


@dataclass(frozen=True)
class Estimate:
    value: float
    objective: float
    boundary_hit: bool


class LeastSquaresEstimator:
    """Minimizes ``|q_model(x) - freq|^2`` over a scalar ``x`` inside ``bounds``.

    The model is tabulated once on a uniform grid; each estimate takes the
    best grid point and refines between its neighbours with a bounded
    golden-section/Brent search.
    """

    def __init__(self, model: ParametricModel, bounds, grid_points: int = GRID_POINTS,
                 xtol: float = X_TOL):
        if len(model.names) != 1:
            raise ValueError("only scalar parameters can be estimated")
        lo, hi = map(float, bounds)
        if not hi > lo:
            raise ValueError(f"empty search interval {bounds}")
        self.model = model
        self.bounds = (lo, hi)
        self.xtol = xtol
        self.grid = np.linspace(lo, hi, grid_points)
        self.table = np.array([model.normalized([x]) for x in self.grid])

    def objective(self, x: float, freq: np.ndarray) -> float:
        return float(np.sum((self.model.normalized([x]) - freq) ** 2))

    def __call__(self, frequencies) -> Estimate:
        freq = np.asarray(frequencies, dtype=float)
        if freq.shape != self.table.shape[1:]:
            raise ValueError("frequency vector does not match the setting bank")
        k = int(np.argmin(np.sum((self.table - freq) ** 2, axis=1)))
        a = self.grid[max(k - 1, 0)]
        b = self.grid[min(k + 1, self.grid.size - 1)]
        res = scipy.optimize.minimize_scalar(
            self.objective, bounds=(a, b), args=(freq,), method="bounded",
            options={"xatol": self.xtol})
        x, val = float(res.x), float(res.fun)
        grid_val = float(np.sum((self.table[k] - freq) ** 2))
        if grid_val < val:
            x, val = float(self.grid[k]), grid_val
        lo, hi = self.bounds
        hit = min(x - lo, hi - x) <= self.xtol
        return Estimate(x, val, hit)


def estimate_parameter(frequencies, model: ParametricModel, bounds) -> Estimate:
    """One-shot least-squares estimate; build a :class:`LeastSquaresEstimator` to reuse the grid."""
    return LeastSquaresEstimator(model, bounds)(frequencies)


@dataclass(frozen=True)
class EstimationRun:
    seed: int
    N: int
    settings: tuple
    true_x: float
    estimate: float
    crb_bound: float
    boundary_hit: bool


def task_seed(root_seed: int, grid_index: int, seed_index: int) -> int:
    """64-bit seed for one (grid point, repetition) task, independent of scheduling."""
    ss = np.random.SeedSequence(root_seed, spawn_key=(grid_index, seed_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _with_value(model: ParametricModel, x: float) -> ParametricModel:
    params, settings = model.bind([x])
    return ParametricModel(params, settings, model.names)


def sweep_estimation(grid, model: ParametricModel, N: int, seeds: int, bounds,
                     root_seed: int = 0, threads: int = 1,
                     estimator: LeastSquaresEstimator | None = None) -> list:
    """Estimate the model's scalar at each true value in ``grid``, ``seeds`` times each.

    Rows come back ordered by grid point, then repetition, whatever ``threads`` is.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty grid")
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    lo, hi = map(float, bounds)
    for g in grid:
        if not lo <= g <= hi:
            raise ValueError(f"grid value {g} outside search bounds {bounds}")
    est = estimator or LeastSquaresEstimator(model, bounds)

    def truth(i):
        x = grid[i]
        q = model.normalized([x])
        bound = crb(fisher_matrix(model, [x]), N).trace_bound
        return q, bound, _with_value(model, x).settings

    def one(task):
        i, s, q, bound, settings = task
        seed = task_seed(root_seed, i, s)
        counts = sample_counts(q, N, seed)
        e = est(counts / N)
        return EstimationRun(seed, N, settings, grid[i], e.value, bound, e.boundary_hit)

    tasks = []
    for i in range(len(grid)):
        q, bound, settings = truth(i)
        tasks += [(i, s, q, bound, settings) for s in range(seeds)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, tasks))
    return [one(t) for t in tasks]


@dataclass(frozen=True)
class PointSummary:
    true_x: float
    mean: float
    variance: float
    rms: float
    crb_bound: float
    boundary_hits: int
    n: int


def summarize(runs) -> list:
    """Per-grid-point error statistics, in grid order."""
    by_x: dict = {}
    for r in runs:
        by_x.setdefault(r.true_x, []).append(r)
    out = []
    for x, rows in by_x.items():
        est = np.array([r.estimate for r in rows])
        out.append(PointSummary(
            x, float(est.mean()), float(est.var(ddof=1)) if est.size > 1 else 0.0,
            float(np.sqrt(np.mean((est - x) ** 2))), rows[0].crb_bound,
            sum(r.boundary_hit for r in rows), est.size))
    return out
