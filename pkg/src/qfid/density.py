"""q-Gaussian density on [-2, 2], quadrature against it, and the Jacobi-matrix
moment oracle.

Normalisation: support [-2, 2] and variance ``1 - q`` (the variance-one law
rescaled by ``sqrt(1-q)``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError, NonConvergence, QFidError, QuadFailure
from .qseries import SeriesControl, as_q, _ctrl, _unwrap

NEGATIVE_CLAMP = -1e-12

# Two readings of the product factor in the theta-form density.
READING_Q_POWER = "1-q^n"
READING_POWER_OF_1MQ = "(1-q)^n"
THETA_READINGS = (READING_Q_POWER, READING_POWER_OF_1MQ)


def _check_support(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 2):
        raise DomainError("the q-Gaussian density is supported on [-2, 2]")
    return x


def _chebyshev_coefficients(q, ctrl):
    """``(-1)^{k-1} q^{k(k-1)/2}`` for k = 1.. until the term bound drops under tol."""
    coeffs = []
    for k in range(1, ctrl.max_terms + 1):
        c = (-1) ** (k - 1) * q ** (k * (k - 1) / 2)
        coeffs.append(c)
        # |U_{2k-2}| <= 2k-1 on [-1, 1]
        if abs(c) * (2 * k - 1) <= ctrl.abs_tol:
            return coeffs
    raise NonConvergence("Chebyshev series of the density did not converge")


def q_gaussian_density(x, q, ctrl: SeriesControl | None = None, clamp: bool = True):
    """``f_q(x) = sqrt(4-x^2)/(2 pi) * sum_k (-1)^{k-1} q^{k(k-1)/2} U_{2k-2}(x/2)``.

    Values in ``[-1e-12, 0)`` are roundoff and get clamped to 0 (unless
    ``clamp=False``); anything more negative raises, since it would contradict
    positivity of the density.
    """
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    scalar = np.ndim(x) == 0
    x = _check_support(x)
    y = x / 2
    total = np.zeros_like(y)
    u_even = np.ones_like(y)        # U_{2k-2}(y)
    u_odd = 2 * y                   # U_{2k-1}(y)
    for c in _chebyshev_coefficients(q, ctrl):
        total += c * u_even
        u_next_even = 2 * y * u_odd - u_even
        u_odd, u_even = 2 * y * u_next_even - u_odd, u_next_even
    f = np.sqrt(np.maximum(4 - x * x, 0.0)) / (2 * np.pi) * total
    if clamp:
        if np.any(f < NEGATIVE_CLAMP):
            raise QFidError(f"density negative beyond roundoff: min {f.min():.3e}")
        f = np.where(f < 0, 0.0, f)
    return _unwrap(f, scalar)


def _theta_density_raw(x, q, reading, ctrl):
    """``sin(t)/pi * prod_n c_n |1 - q^n e^{2it}|^2`` with ``2 cos t = x``."""
    t = np.arccos(x / 2)
    e2 = np.exp(2j * t)
    out = np.sin(t) / np.pi
    qn = 1.0
    for n in range(1, ctrl.max_terms + 1):
        qn *= q
        if qn <= ctrl.abs_tol:
            break
        c = (1 - qn) if reading == READING_Q_POWER else (1 - q) ** n
        out = out * c * np.abs(1 - qn * e2) ** 2
    return out


@dataclass(frozen=True)
class ThetaReadingReport:
    """Which product factor reproduces the Chebyshev density, and the fitted constant."""

    q: float
    reading: str
    calibration_constant: float
    max_relative_gap: dict = field(default_factory=dict)


@lru_cache(maxsize=128)
def select_theta_reading(q, ctrl: SeriesControl | None = None) -> ThetaReadingReport:
    """Compare both readings against the Chebyshev form; keep the one that agrees.

    The constant is ``f_cheb(0) / f_theta_raw(0)`` for the kept reading.
    """
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    xs = np.linspace(-1.9, 1.9, 17)
    ref = q_gaussian_density(xs, q, ctrl)
    gaps = {}
    for reading in THETA_READINGS:
        raw = _theta_density_raw(xs, q, reading, ctrl)
        gaps[reading] = float(np.max(np.abs(raw - ref) / ref))
    best = min(THETA_READINGS, key=lambda r: gaps[r])
    const = float(q_gaussian_density(0.0, q, ctrl) / _theta_density_raw(np.array(0.0), q, best, ctrl))
    return ThetaReadingReport(q=q, reading=best, calibration_constant=const, max_relative_gap=gaps)


def q_gaussian_density_theta(x, q, ctrl: SeriesControl | None = None):
    """Theta-product form of ``f_q`` under the reading picked by :func:`select_theta_reading`."""
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    scalar = np.ndim(x) == 0
    x = _check_support(x)
    rep = select_theta_reading(q, ctrl)
    return _unwrap(rep.calibration_constant * _theta_density_raw(x, q, rep.reading, ctrl), scalar)


# ----------------------------------------------------------------------------
# quadrature


def cauchy_kernel(z):
    """``x -> 1/(z - x)``; the pole must stay off the support."""
    z = complex(z)
    if z.imag == 0 and -2 <= z.real <= 2:
        raise DomainError("Cauchy kernel pole lies on the support [-2, 2]")
    return lambda x: 1 / (z - x)


def power_kernel(k: int):
    """``x -> x^k``."""
    return lambda x: x**k


def integrate_density(q, weight=None, quad_tol: float = 1e-10, ctrl: SeriesControl | None = None,
                      limit: int = 400):
    """``int_{-2}^{2} f_q(x) weight(x) dx`` by adaptive Gauss-Kronrod.

    The substitution ``x = 2 cos t`` turns the density into the smooth
    ``(2/pi) sum_k c_k sin((2k-1)t) sin t`` and removes the endpoint square
    roots.  ``weight`` may return complex values; real and imaginary parts are
    integrated separately, each to ``quad_tol/2``.
    """
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    coeffs = _chebyshev_coefficients(q, ctrl)
    odd = [2 * k + 1 for k in range(len(coeffs))]

    def density_dx(t):
        # f_q(2 cos t) * |dx/dt|
        s = 0.0
        for c, m in zip(coeffs, odd):
            s += c * math.sin(m * t)
        return 2 / math.pi * s * math.sin(t)

    parts = {"re": density_dx}
    is_complex = weight is not None and any(
        isinstance(weight(x), complex) for x in (-1.7, 0.1, 1.3)
    )
    if weight is not None:
        parts["re"] = lambda t: density_dx(t) * complex(weight(2 * math.cos(t))).real
    if is_complex:
        parts["im"] = lambda t: density_dx(t) * complex(weight(2 * math.cos(t))).imag

    out = {}
    for name, fn in parts.items():
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, err = integrate.quad(fn, 0.0, math.pi, epsabs=quad_tol / 2, epsrel=0.0, limit=limit)
            except integrate.IntegrationWarning as exc:
                raise QuadFailure(str(exc)) from exc
        if err > quad_tol / 2:
            raise QuadFailure(f"quadrature error estimate {err:.2e} above {quad_tol / 2:.2e}")
        out[name] = val
    if is_complex:
        return complex(out["re"], out["im"])
    return out["re"]


def chebyshev_cauchy_term(k: int, z, quad_tol: float = 1e-11):
    """``(1/2pi) int U_{2k-2}(x/2) sqrt(4-x^2) / (z-x) dx`` by quadrature (k >= 1)."""
    if k < 1:
        raise DomainError("k starts at 1")
    kern = cauchy_kernel(z)

    def part(t, which):
        # x = 2 cos t: U_{2k-2}(cos t) sin t = sin((2k-1) t); dx = 2 sin t dt; sqrt(4-x^2) = 2 sin t
        v = 2 / math.pi * math.sin((2 * k - 1) * t) * math.sin(t) * kern(2 * math.cos(t))
        return v.real if which == "re" else v.imag

    vals = []
    for which in ("re", "im"):
        val, err = integrate.quad(part, 0.0, math.pi, args=(which,), epsabs=quad_tol / 2, epsrel=0.0, limit=400)
        if err > quad_tol / 2:
            raise QuadFailure(f"quadrature error estimate {err:.2e}")
        vals.append(val)
    return complex(*vals)


# ----------------------------------------------------------------------------
# Jacobi operator


@dataclass(frozen=True)
class JacobiOperator:
    """Truncated tridiagonal operator with zero diagonal and ``b_n = sqrt(1-q^n)``."""

    q: float
    truncation: int

    @property
    def offdiag(self) -> np.ndarray:
        n = np.arange(1, self.truncation)
        return np.sqrt(1 - self.q**n)

    def matrix(self) -> np.ndarray:
        b = self.offdiag
        return np.diag(b, 1) + np.diag(b, -1)


def jacobi_moments(k_max: int, q, truncation: int | None = None) -> np.ndarray:
    """Moments ``m_k = <e0, J^k e0>`` for ``k = 0..k_max``.

    Exact once ``truncation >= k_max // 2 + 1``: a walk of length ``k`` from
    the origin never reaches deeper than ``k // 2``.
    """
    q = as_q(q)
    if truncation is None:
        truncation = k_max // 2 + 1
    if truncation < k_max // 2 + 1:
        raise DomainError("truncation must be at least k_max/2 + 1")
    J = JacobiOperator(q, truncation).matrix()
    v = np.zeros(truncation)
    v[0] = 1.0
    moments = np.empty(k_max + 1)
    for k in range(k_max + 1):
        moments[k] = v[0]
        v = J @ v
    return moments
