"""Closed-form physics of the two-emitter antenna.

Two identical two-level systems (TLS) with parallel dipoles perpendicular to
the line joining them.  Time is measured in units of the single-emitter decay
rate, so ``gamma = 1`` by default and every delay is really ``gamma * tau``.

Index convention for the correlation tensor: ``values[j-1, l-1, m-1, n-1]``
holds the delay-dependent factor of

    <s_j^+(t) s_l^+(t+tau) s_m^-(t+tau) s_n^-(t)>

for the doubly excited initial state |++>, i.e. the tensor with lower indices
(j, n) and upper indices (l, m).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

# Below this separation both couplings are summed from their power series;
# the closed forms cancel terms of size 1/zeta12^2 there.
SERIES_THRESHOLD = 1.0
_SERIES_TERMS = 14


def _gamma12_coefficients(n):
    # gamma12 / (1.5 gamma) = sum_k c_k zeta^(2k)
    f = math.factorial
    return [(-1) ** k * (1 / f(2 * k + 1) - 1 / f(2 * k + 2) + 1 / f(2 * k + 3))
            for k in range(n)]


def _f12_coefficients(n):
    # f12 / (1.5 gamma) = sum_k a_k zeta^(2k - 3)
    f = math.factorial
    out = [1.0]
    for k in range(1, n):
        out.append((-1) ** k / f(2 * k) + (-1) ** (k - 1) * (1 / f(2 * k - 1) - 1 / f(2 * k - 2)))
    return out


_G12_COEF = _gamma12_coefficients(_SERIES_TERMS)
_F12_COEF = _f12_coefficients(_SERIES_TERMS)


@dataclass(frozen=True)
class AntennaParams:
    """Decay rate ``gamma`` and dimensionless emitter separation ``zeta12 = omega*zeta/c``."""

    gamma: float = 1.0
    zeta12: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not np.isfinite(self.zeta12) or self.zeta12 <= 0:
            raise ValueError(f"zeta12 must be positive, got {self.zeta12}")


@dataclass(frozen=True)
class CouplingCoefficients:
    f12: float
    gamma12: float


def coupling_f12(params: AntennaParams) -> float:
    """Elastic (dipole-dipole exchange) coupling, in the same units as ``gamma``."""
    z = params.zeta12
    if z < SERIES_THRESHOLD:
        z2 = z * z
        tail = sum(a * z2**k for k, a in enumerate(_F12_COEF[1:]))
        return 1.5 * params.gamma * (1.0 / z**3 + tail / z)
    c, s = np.cos(z), np.sin(z)
    return float(-1.5 * params.gamma * (c / z - (s / z**2 + c / z**3)))


def coupling_gamma12(params: AntennaParams) -> float:
    """Inelastic (cross-damping) coupling; never exceeds ``gamma`` in magnitude."""
    z = params.zeta12
    if z < SERIES_THRESHOLD:
        z2 = z * z
        return 1.5 * params.gamma * sum(c * z2**k for k, c in enumerate(_G12_COEF))
    c, s = np.cos(z), np.sin(z)
    return float(1.5 * params.gamma * (s / z - (s / z**3 - c / z**2)))


def couplings(params: AntennaParams) -> CouplingCoefficients:
    return CouplingCoefficients(coupling_f12(params), coupling_gamma12(params))


def _pattern(j: int, l: int, m: int, n: int) -> str:
    """Classify an index quadruple into one of the four closed-form families.

    Returns one of ``"minus"`` (-cos + cosh), ``"plus"`` (cos + cosh),
    ``"a"`` (-i sin - sinh) and ``"b"`` (i sin - sinh).
    """
    if (l, m) == (j, n):
        return "minus"
    if j != n:
        if (l, m) == (n, j):
            return "plus"
        if l == m == j:
            return "a"
        if l == m == n:
            return "b"
    else:
        if l == m:
            return "plus"
        if l == j:
            return "a"
        if m == j:
            return "b"
    raise AssertionError((j, l, m, n))  # every quadruple is covered above


# (j, l, m, n) zero-based -> family, fixed once
PATTERNS = {
    (j - 1, l - 1, m - 1, n - 1): _pattern(j, l, m, n)
    for j, l, m, n in itertools.product((1, 2), repeat=4)
}


def upsilon_array(f12: float, gamma12: float, tau) -> np.ndarray:
    """Tensor values for an array of delays; shape ``tau.shape + (2, 2, 2, 2)``."""
    tau = np.asarray(tau, dtype=float)
    c = np.cos(f12 * tau)
    s = np.sin(f12 * tau)
    ch = np.cosh(gamma12 * tau)
    sh = np.sinh(gamma12 * tau)
    family = {
        "minus": -c + ch + 0j,
        "plus": c + ch + 0j,
        "a": -1j * s - sh,
        "b": 1j * s - sh,
    }
    out = np.empty(tau.shape + (2, 2, 2, 2), dtype=complex)
    for idx, name in PATTERNS.items():
        out[(...,) + idx] = family[name]
    return out


@dataclass(frozen=True)
class UpsilonTensor:
    values: np.ndarray
    tau: float

    def __call__(self, j: int, l: int, m: int, n: int) -> complex:
        """Entry with one-based emitter indices."""
        return complex(self.values[j - 1, l - 1, m - 1, n - 1])


def upsilon(params: AntennaParams, tau: float) -> UpsilonTensor:
    if tau < 0:
        raise ValueError(f"delay must be non-negative, got {tau}")
    cc = couplings(params)
    return UpsilonTensor(upsilon_array(cc.f12, cc.gamma12, tau), float(tau))


def pair_correlator(params: AntennaParams, t: float, tau: float,
                    j: int, l: int, m: int, n: int) -> complex:
    """Closed-form <s_j^+(t) s_l^+(t+tau) s_m^-(t+tau) s_n^-(t)> starting from |++>."""
    if t < 0 or tau < 0:
        raise ValueError("t and tau must be non-negative")
    ups = upsilon(params, tau)
    return 0.5 * np.exp(-params.gamma * (2 * t + tau)) * ups(j, l, m, n)
