"""Sensing geometries and the delayed two-photon detection probability.

Each scheme maps a detector placement to the pair of complex amplitudes
``(f1, f2)`` with which the two emitters reach that detector.  A
:class:`MeasurementSetting` fixes the two detector angles (first and second
photon), the nominal delay and the half-width of a uniform delay window.

Probabilities carry no absolute scale: the common ``exp(-2 gamma t)`` factor
and the unknown detector constant are stripped, and the remaining constant is
chosen so that the rotation scheme with coinciding detectors reproduces the
closed-form rotation probability exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.special

from .antenna import PATTERNS, AntennaParams, couplings, upsilon_array

GL_NODES = 32


def bessel_j1(y):
    """Bessel function of the first kind, order one."""
    return scipy.special.j1(y)


def somb(y):
    """Sombrero function ``2 J1(y)/y`` with ``somb(0) = 1``."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-8
    safe = np.where(small, 1.0, y)
    out = np.where(small, 1.0 - y**2 / 8.0, 2.0 * bessel_j1(safe) / safe)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DetectorAmplitudes:
    f1: complex
    f2: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2], dtype=complex)


def _check_angle(name, value):
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite")


def _check_nonneg(name, value):
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class Rotation:
    """Direct observation of the antenna after a small rotation ``delta_alpha``."""

    delta_alpha: float = 0.0

    def __post_init__(self):
        _check_angle("delta_alpha", self.delta_alpha)

    def amplitudes(self, params: AntennaParams, angle: float) -> DetectorAmplitudes:
        return amplitudes_rotation(self, params, angle)


@dataclass(frozen=True)
class AntennaDistance:
    """Direct observation of an unrotated antenna; the unknown is ``zeta12``."""

    def amplitudes(self, params: AntennaParams, angle: float) -> DetectorAmplitudes:
        return amplitudes_rotation(Rotation(0.0), params, angle)


@dataclass(frozen=True)
class FarFieldTwo:
    """Two point scatterers at phase separation ``kr`` seen from the antenna at ``theta``."""

    theta: float
    kr: float
    kRo: float = 1.0

    def __post_init__(self):
        _check_angle("theta", self.theta)
        _check_nonneg("kr", self.kr)
        if not self.kRo > 0:
            raise ValueError(f"kRo must be positive, got {self.kRo}")

    def amplitudes(self, params: AntennaParams, angle: float) -> DetectorAmplitudes:
        return amplitudes_far_two(self, params, angle)


@dataclass(frozen=True)
class ThreeScatterer:
    """Three collinear scatterers with gaps ``kr1`` and ``kr2`` (in phase units)."""

    theta: float
    kr1: float
    kr2: float
    kRo: float = 1.0

    def __post_init__(self):
        _check_angle("theta", self.theta)
        _check_nonneg("kr1", self.kr1)
        _check_nonneg("kr2", self.kr2)
        if not self.kRo > 0:
            raise ValueError(f"kRo must be positive, got {self.kRo}")

    def amplitudes(self, params: AntennaParams, angle: float) -> DetectorAmplitudes:
        return amplitudes_far_three(self, params, angle)


@dataclass(frozen=True)
class NearField:
    """Two holes at angular separation ``delta_psi`` imaged through a lens.

    ``x`` is the lens parameter ``L omega R_o / (c s_0)``.  Both detectors sit at
    the image point opposite the hole seen at ``theta``, so detector angles in
    a setting are ignored.
    """

    theta: float
    delta_psi: float
    x: float

    def __post_init__(self):
        _check_angle("theta", self.theta)
        _check_angle("delta_psi", self.delta_psi)
        _check_nonneg("x", self.x)

    def amplitudes(self, params: AntennaParams, angle: float = 0.0) -> DetectorAmplitudes:
        return amplitudes_near(self, params)


SchemeConfig = Union[Rotation, AntennaDistance, FarFieldTwo, ThreeScatterer, NearField]


def amplitudes_rotation(cfg: Rotation, params: AntennaParams, detector_angle: float) -> DetectorAmplitudes:
    phase = params.zeta12 * np.cos(detector_angle + cfg.delta_alpha)
    return DetectorAmplitudes(1.0 + 0j, complex(np.exp(-1j * phase)))


def amplitudes_far_two(cfg: FarFieldTwo, params: AntennaParams, phi: float) -> DetectorAmplitudes:
    dalpha = cfg.kr / cfg.kRo
    path = np.exp(-1j * cfg.kr * np.cos(phi))
    z = params.zeta12
    f1 = 1.0 + path
    f2 = np.exp(-1j * z * np.cos(cfg.theta)) + np.exp(-1j * z * np.cos(cfg.theta + dalpha)) * path
    return DetectorAmplitudes(complex(f1), complex(f2))


def amplitudes_far_three(cfg: ThreeScatterer, params: AntennaParams, phi: float) -> DetectorAmplitudes:
    offsets = np.array([0.0, cfg.kr1, cfg.kr1 + cfg.kr2])
    path = np.exp(-1j * offsets * np.cos(phi))
    view = cfg.theta + offsets / cfg.kRo
    f1 = path.sum()
    f2 = (np.exp(-1j * params.zeta12 * np.cos(view)) * path).sum()
    return DetectorAmplitudes(complex(f1), complex(f2))


def amplitudes_near(cfg: NearField, params: AntennaParams) -> DetectorAmplitudes:
    s = somb(cfg.delta_psi * cfg.x)
    z = params.zeta12
    f1 = 1.0 + s
    f2 = np.exp(-1j * z * np.cos(cfg.theta)) + np.exp(-1j * z * np.cos(cfg.theta + cfg.delta_psi)) * s
    return DetectorAmplitudes(complex(f1), complex(f2))


class AssemblyError(ArithmeticError):
    """The assembled two-photon rate came out with a non-negligible imaginary part."""


def _g2_from_arrays(a: np.ndarray, b: np.ndarray, params: AntennaParams, tau) -> np.ndarray:
    cc = couplings(params)
    tau = np.asarray(tau, dtype=float)
    ups = upsilon_array(cc.f12, cc.gamma12, tau)
    coeff = np.einsum("j,l,m,n->jlmn", a.conj(), b.conj(), b, a)
    total = np.einsum("...jlmn,jlmn->...", ups, coeff)
    scale = np.sum(np.abs(ups) * np.abs(coeff), axis=(-4, -3, -2, -1))
    if np.any(np.abs(total.imag) > 1e-9 * np.maximum(scale, 1e-300)):
        raise AssemblyError("imaginary residual in assembled G2")
    val = 0.25 * np.exp(-params.gamma * tau) * total.real
    return np.where(val < 0, 0.0, val)


def g2_probability(amps_a: DetectorAmplitudes, amps_b: DetectorAmplitudes,
                   params: AntennaParams, tau) -> float:
    """Rate for a first photon at detector A and a second at B after ``tau``.

    Accepts an array of delays and returns an array in that case.
    """
    if np.any(np.asarray(tau) < 0):
        raise ValueError("delay must be non-negative")
    out = _g2_from_arrays(amps_a.as_array(), amps_b.as_array(), params, tau)
    return out if out.ndim else float(out)


def rotation_probability_closed(theta: float, delta_alpha: float,
                                params: AntennaParams, tau: float) -> float:
    """Same-angle rotation probability written out in closed form."""
    if tau < 0:
        raise ValueError("delay must be non-negative")
    cc = couplings(params)
    phi = params.zeta12 * np.cos(theta + delta_alpha)
    cp = np.cos(phi)
    bracket = ((1 + cp**2) * np.cosh(cc.gamma12 * tau)
               - 2 * cp * np.sinh(cc.gamma12 * tau)
               + np.sin(phi) ** 2 * np.cos(cc.f12 * tau))
    return float(np.exp(-params.gamma * tau) * bracket)


@dataclass(frozen=True)
class MeasurementSetting:
    """One detection configuration.

    ``angles`` are the observation angles of the first- and second-photon
    detectors; ``tau0`` and ``delta_tau`` define the uniform delay window
    ``[tau0 - delta_tau, tau0 + delta_tau]``.
    """

    scheme: SchemeConfig
    angles: tuple = (0.0, 0.0)
    tau0: float = 0.0
    delta_tau: float = 0.0

    def __post_init__(self):
        if len(self.angles) != 2:
            raise ValueError("angles must hold two detector angles")
        _check_nonneg("tau0", self.tau0)
        _check_nonneg("delta_tau", self.delta_tau)
        if self.tau0 - self.delta_tau < 0:
            raise ValueError(
                f"delay window starts below zero: tau0={self.tau0}, delta_tau={self.delta_tau}")


def same_angle(scheme: SchemeConfig, angle: float, tau0: float = 0.0,
               delta_tau: float = 0.0) -> MeasurementSetting:
    return MeasurementSetting(scheme, (angle, angle), tau0, delta_tau)


_gl_cache: dict = {}


def gauss_legendre(n: int = GL_NODES):
    if n not in _gl_cache:
        _gl_cache[n] = np.polynomial.legendre.leggauss(n)
    return _gl_cache[n]


def window_average(fn, tau0: float, delta_tau: float, nodes: int = GL_NODES) -> float:
    """Mean of ``fn`` over the uniform window; ``fn`` must accept an array of delays."""
    if tau0 - delta_tau < 0:
        raise ValueError("delay window starts below zero")
    if delta_tau == 0:
        return float(fn(np.asarray(tau0, dtype=float)))
    x, w = gauss_legendre(nodes)
    vals = np.asarray(fn(tau0 + delta_tau * x))
    return float(0.5 * np.dot(w, vals))


def _phi1(z):
    """``(exp(z) - 1)/z`` for complex arrays, accurate near zero."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    return np.where(small, 1 + z / 2 + z * z / 6 + z**3 / 24, np.expm1(safe) / safe)


def window_mean_exp(rate, tau0: float, delta_tau: float):
    """Mean of ``exp(rate * tau)`` over ``[tau0 - delta_tau, tau0 + delta_tau]``."""
    rate = np.asarray(rate, dtype=complex)
    lo = tau0 - delta_tau
    return np.exp(rate * lo) * _phi1(rate * 2 * delta_tau)


def averaged_upsilon(params: AntennaParams, tau0: float, delta_tau: float) -> np.ndarray:
    """Window mean of ``exp(-gamma tau) * upsilon(tau)``, computed in closed form.

    Every entry is a combination of ``exp(-gamma tau)`` times cos/sin of
    ``f12 tau`` and cosh/sinh of ``gamma12 tau``, so the mean reduces to means
    of four exponentials.  This stays exact when ``f12 * delta_tau`` is huge.
    """
    if tau0 - delta_tau < 0:
        raise ValueError("delay window starts below zero")
    cc = couplings(params)
    g = params.gamma
    osc, up, down = window_mean_exp([-g + 1j * cc.f12, -g + cc.gamma12, -g - cc.gamma12],
                                    tau0, delta_tau)
    c, s = osc.real, osc.imag
    ch, sh = 0.5 * (up + down).real, 0.5 * (up - down).real
    family = {"minus": -c + ch, "plus": c + ch, "a": -1j * s - sh, "b": 1j * s - sh}
    out = np.empty((2, 2, 2, 2), dtype=complex)
    for idx, name in PATTERNS.items():
        out[idx] = family[name]
    return out


def _assemble(a: np.ndarray, b: np.ndarray, weighted_ups: np.ndarray) -> float:
    coeff = np.einsum("j,l,m,n->jlmn", a.conj(), b.conj(), b, a)
    total = np.sum(weighted_ups * coeff)
    scale = np.sum(np.abs(weighted_ups) * np.abs(coeff))
    if abs(total.imag) > 1e-9 * max(scale, 1e-300):
        raise AssemblyError("imaginary residual in assembled G2")
    return max(0.25 * total.real, 0.0)


def setting_amplitudes(setting: "MeasurementSetting", params: AntennaParams):
    a = setting.scheme.amplitudes(params, setting.angles[0]).as_array()
    b = setting.scheme.amplitudes(params, setting.angles[1]).as_array()
    return a, b


def time_averaged_probability(setting: MeasurementSetting, params: AntennaParams,
                              method: str = "exact", nodes: int = GL_NODES) -> float:
    """Two-photon rate averaged uniformly over the setting's delay window.

    ``method="exact"`` integrates the window analytically; ``method="gauss"``
    applies ``nodes``-point Gauss-Legendre quadrature to the point rate.
    """
    a, b = setting_amplitudes(setting, params)
    if method == "exact":
        return _assemble(a, b, averaged_upsilon(params, setting.tau0, setting.delta_tau))
    if method == "gauss":
        return window_average(lambda tau: _g2_from_arrays(a, b, params, tau),
                              setting.tau0, setting.delta_tau, nodes)
    raise ValueError(f"unknown method {method!r}")


def zero_delay_interference(amps_a: DetectorAmplitudes, amps_b: DetectorAmplitudes) -> float:
    """``|f1(A) f2(B) + f1(B) f2(A)|^2``; the zero-delay rate up to a constant."""
    return float(abs(amps_a.f1 * amps_b.f2 + amps_b.f1 * amps_a.f2) ** 2)
