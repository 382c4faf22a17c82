"""Fisher information, Cramer-Rao bounds and numerical derivatives."""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .antenna import AntennaParams
from .schemes import time_averaged_probability

SINGULAR_RTOL = 1e-12


class SmoothnessError(ArithmeticError):
    """Central differences at step h and h/2 disagree badly."""


class ReducedConfidenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ParametricModel:
    """Probabilities of a bank of settings as a function of named unknowns.

    Each name in ``names`` is either a field of :class:`AntennaParams` (e.g.
    ``"zeta12"``) or a field of the scheme carried by every setting (e.g.
    ``"kr"``).  ``probabilities(x)`` substitutes ``x`` and evaluates the
    time-averaged rate for each setting.
    """

    params: AntennaParams
    settings: tuple
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(self.settings))
        object.__setattr__(self, "names", tuple(self.names))
        antenna_fields = {f.name for f in dataclasses.fields(AntennaParams)}
        for name in self.names:
            if name in antenna_fields:
                continue
            for s in self.settings:
                if name not in {f.name for f in dataclasses.fields(s.scheme)}:
                    raise ValueError(f"{type(s.scheme).__name__} has no field {name!r}")

    def bind(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        antenna_fields = {f.name for f in dataclasses.fields(AntennaParams)}
        a_upd = {n: float(v) for n, v in zip(self.names, x) if n in antenna_fields}
        s_upd = {n: float(v) for n, v in zip(self.names, x) if n not in antenna_fields}
        params = dataclasses.replace(self.params, **a_upd) if a_upd else self.params
        settings = [dataclasses.replace(s, scheme=dataclasses.replace(s.scheme, **s_upd))
                    if s_upd else s for s in self.settings]
        return params, settings

    def probabilities(self, x) -> np.ndarray:
        params, settings = self.bind(x)
        return np.array([time_averaged_probability(s, params) for s in settings])

    def normalized(self, x) -> np.ndarray:
        p = self.probabilities(x)
        return p / p.sum()


def _step(xk: float, rel: float) -> float:
    return rel * max(1.0, abs(xk))


def finite_difference_gradient(prob_fn: Callable, x, rel_step: float = 1e-6,
                               return_confidence: bool = False, steps=None):
    """Central-difference Jacobian of a (vector-valued) function.

    Returns an array of shape ``(len(prob_fn(x)), len(x))``, squeezed for scalar
    inputs/outputs the same way the inputs were given.  A second pass at half
    the step checks the result: disagreement above 1e-6 relative lowers the
    confidence flag, above 1e-3 raises :class:`SmoothnessError`.

    The default step is ``rel_step * max(1, |x_k|)``; ``steps`` overrides it
    with absolute per-coordinate steps for functions with a faster intrinsic
    scale (the antenna phase ``f12 * tau`` near ``zeta12 -> 0``).
    """
    scalar_x = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    f0 = np.asarray(prob_fn(x[0] if scalar_x else x), dtype=float)
    scalar_f = f0.ndim == 0
    f0 = np.atleast_1d(f0)

    if steps is None:
        base = np.array([_step(xk, rel_step) for xk in x])
    else:
        base = np.broadcast_to(np.asarray(steps, dtype=float), x.shape).copy()

    def central(shrink):
        jac = np.empty((f0.size, x.size))
        for k in range(x.size):
            h = base[k] / shrink
            xp, xm = x.copy(), x.copy()
            xp[k] += h
            xm[k] -= h
            fp = np.atleast_1d(prob_fn(xp[0] if scalar_x else xp))
            fm = np.atleast_1d(prob_fn(xm[0] if scalar_x else xm))
            jac[:, k] = (fp - fm) / (2 * h)
        return jac

    jac = central(1.0)
    jac_half = central(2.0)
    # below this the two estimates differ by roundoff alone
    floor = 1e4 * np.finfo(float).eps * np.max(np.abs(f0)) / np.min(base) + 1e-300
    scale = np.maximum(np.abs(jac_half), floor)
    disagreement = float(np.max(np.abs(jac - jac_half) / scale))
    if disagreement > 1e-3:
        raise SmoothnessError(f"Richardson check failed (relative disagreement {disagreement:.3g})")
    confident = disagreement <= 1e-6
    if not confident and not return_confidence:
        warnings.warn(f"finite-difference disagreement {disagreement:.3g}", ReducedConfidenceWarning)
    out = jac_half
    if scalar_f:
        out = out[0]
    if scalar_x:
        out = out[..., 0]
    if scalar_f and scalar_x:
        out = float(out)
    return (out, confident) if return_confidence else out


def fisher_rare_event(prob_fn: Callable, x: float, step=None) -> float:
    """Fisher information ``(dp/dx)^2 / p`` for a single rare outcome."""
    p = float(prob_fn(x))
    if not p > 0:
        raise ValueError(f"probability must be positive, got {p}")
    dp, _ = finite_difference_gradient(prob_fn, x, return_confidence=True, steps=step)
    return float(dp) ** 2 / p


@dataclass(frozen=True)
class FisherResult:
    matrix: np.ndarray
    min_eigenvalue: float
    trace_inverse: float
    singular: bool

    def crb_total(self, N: float) -> float:
        return self.trace_inverse / N


def analyze_fisher(matrix) -> FisherResult:
    """Eigen-analysis and inverse trace of a Fisher information matrix."""
    F = np.atleast_2d(np.asarray(matrix, dtype=float))
    F = 0.5 * (F + F.T)
    eig = np.linalg.eigvalsh(F)
    fmin = float(eig[0])
    tr = float(np.trace(F))
    singular = not (tr > 0 and fmin > SINGULAR_RTOL * tr)
    if singular:
        tinv = float("inf")
    elif F.shape == (1, 1):
        tinv = 1.0 / F[0, 0]
    elif F.shape == (2, 2):
        det = F[0, 0] * F[1, 1] - F[0, 1] ** 2
        tinv = float((F[0, 0] + F[1, 1]) / det)
    else:
        tinv = float(np.sum(1.0 / eig))
    return FisherResult(F, max(fmin, 0.0), tinv, singular)


def fisher_from_distribution(q: np.ndarray, dq: np.ndarray) -> np.ndarray:
    """``F_kl = sum_j dq_j/dx_k dq_j/dx_l / q_j`` for a complete distribution."""
    q = np.asarray(q, dtype=float)
    dq = np.atleast_2d(np.asarray(dq, dtype=float).reshape(q.size, -1))
    if np.any(q <= 0):
        raise ValueError("all outcome probabilities must be positive")
    return (dq / q[:, None]).T @ dq


def fisher_matrix(model: ParametricModel, x) -> FisherResult:
    """Fisher matrix of the setting bank with probabilities normalized by their sum."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    q = model.normalized(x)
    dq, _ = finite_difference_gradient(model.normalized, x, return_confidence=True)
    return analyze_fisher(fisher_from_distribution(q, dq))


@dataclass(frozen=True)
class CramerRao:
    trace_bound: float
    eigen_bound: float


def crb(F: FisherResult, N: float) -> CramerRao:
    """Total-variance bounds ``Tr[F^-1]/N >= 1/(N f_min)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if F.singular:
        return CramerRao(float("inf"), float("inf"))
    trace_bound = F.trace_inverse / N
    eigen_bound = 1.0 / (N * F.min_eigenvalue)
    assert trace_bound >= eigen_bound * (1 - 1e-12), (trace_bound, eigen_bound)
    return CramerRao(trace_bound, eigen_bound)


def rotation_fisher(theta: float, params: AntennaParams, tau0: float, delta_tau: float = 0.0,
                    delta_alpha: float = 0.0) -> float:
    """Rare-event Fisher information for the rotation angle at a single direction."""
    from .schemes import Rotation, same_angle

    model = ParametricModel(params, [same_angle(Rotation(delta_alpha), theta, tau0, delta_tau)],
                            ("delta_alpha",))
    return fisher_rare_event(lambda a: model.probabilities(a)[0], delta_alpha)


def scalar_rare_event(model: ParametricModel, x: float, step=None) -> float:
    """Rare-event Fisher information of the first setting in ``model``."""
    return fisher_rare_event(lambda v: model.probabilities(v)[0], x, step)


def zeta_step(zeta12: float, tau_max: float, gamma: float = 1.0) -> float:
    """Finite-difference step in ``zeta12`` resolving the exchange phase ``f12 * tau``.

    ``|d f12/d zeta12| ~ 4.5 gamma / zeta12^4`` at small separation, so the
    step is shrunk until the phase moves by about 1e-4 rad.
    """
    scale = zeta12**4 / (4.5 * gamma * max(tau_max, 1e-12))
    return 1e-6 * max(1.0, zeta12) if scale > 1e-2 else 1e-4 * scale


def fisher_sweep(model: ParametricModel, grid: Sequence[float]) -> list:
    return [fisher_matrix(model, [v]) for v in grid]
