"""Special functions of the q-Gaussian: Chebyshev and q-Hermite polynomials,
q-Pochhammer products, the entire function ``g_q`` and the theta function
``Theta``.

Everything here is vectorised over the point argument; scalar in, scalar out.

``g_q(w) = sum_k (-1)^k q^{k(k+1)/2} w^{2k+1}``.  For ``|w| <= 1`` the series
is summed directly.  For ``|w| > 1`` the alternating series cancels badly
(the error is roughly ``eps * |g_q(i|w|)|``, already 1e-5 at ``q=0.9, |w|=3``)
so we use the Jacobi triple product

    g_q(w) - g_q(1/w) = w (q;q)_inf (q w^2;q)_inf (w^-2;q)_inf

and only sum the well-behaved series for ``g_q(1/w)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, NonConvergence

Q_MAX = 0.999


@dataclass(frozen=True)
class QParam:
    """Deformation parameter, validated against ``[0, Q_MAX]``."""

    q: float

    def __post_init__(self):
        q = float(self.q)
        if not (0.0 <= q <= Q_MAX):
            raise DomainError(f"q={self.q!r} outside the valid range [0, {Q_MAX}]")
        object.__setattr__(self, "q", q)

    def __float__(self):
        return self.q


def as_q(q) -> float:
    """Return ``q`` as a validated float (accepts ``QParam`` or a number)."""
    if isinstance(q, QParam):
        return q.q
    return QParam(q).q


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for every infinite series or product.

    A series stops once the magnitude of its current term is at most
    ``abs_tol``; reaching ``max_terms`` first raises :class:`NonConvergence`.
    """

    abs_tol: float = 1e-14
    max_terms: int = 512


DEFAULT_CONTROL = SeriesControl()


def _ctrl(ctrl):
    return DEFAULT_CONTROL if ctrl is None else ctrl


def _unwrap(arr, scalar_input):
    if scalar_input:
        return arr.item() if hasattr(arr, "item") else arr
    return arr


# ----------------------------------------------------------------------------
# polynomials


def chebyshev_u(k: int, x):
    """Chebyshev polynomial of the second kind ``U_k(x)`` by forward recurrence."""
    if k < 0:
        raise DomainError("k must be non-negative")
    scalar = np.ndim(x) == 0
    x = np.asarray(x)
    u_prev = np.zeros_like(x, dtype=np.result_type(x, float))
    u = np.ones_like(u_prev)
    for _ in range(k):
        u, u_prev = 2 * x * u - u_prev, u
    return _unwrap(u, scalar)


def q_hermite(n: int, x, q) -> float:
    """Continuous q-Hermite polynomial ``H_n(x|q)`` (monic, variance-one scaling).

    Uses ``H_{n+1} = x H_n - [n]_q H_{n-1}`` with ``[n]_q = (1-q^n)/(1-q)``.
    """
    q = float(q)
    if not q < 1:
        raise DomainError("q_hermite needs q < 1")
    if n < 0:
        raise DomainError("n must be non-negative")
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    h_prev = np.zeros_like(x)
    h = np.ones_like(x)
    for m in range(n):
        bracket = (1 - q**m) / (1 - q)
        h, h_prev = x * h - bracket * h_prev, h
    return _unwrap(h, scalar)


# ----------------------------------------------------------------------------
# q-Pochhammer


def q_pochhammer(a, q, n=math.inf, ctrl: SeriesControl | None = None):
    """``(a; q)_n = prod_{k<n} (1 - a q^k)``; ``n=math.inf`` for the infinite product.

    The infinite product is truncated once ``|a q^k| <= abs_tol`` for every
    entry of ``a``.
    """
    ctrl = _ctrl(ctrl)
    q = float(q)
    scalar = np.ndim(a) == 0
    a = np.asarray(a, dtype=complex)
    out = np.ones_like(a)
    if n != math.inf:
        n = int(n)
        if n < 0:
            raise DomainError("n must be non-negative")
        qk = 1.0
        for _ in range(n):
            out = out * (1 - a * qk)
            qk *= q
        return _unwrap(out, scalar)
    if not q < 1:
        raise DomainError("infinite q-Pochhammer needs q < 1")
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    qk = 1.0
    for _ in range(ctrl.max_terms):
        if amax * qk <= ctrl.abs_tol:
            return _unwrap(out, scalar)
        out = out * (1 - a * qk)
        qk *= q
    raise NonConvergence(f"(a;q)_inf did not converge in {ctrl.max_terms} factors")


# ----------------------------------------------------------------------------
# g_q


def _g_series(w, q, ctrl, prime):
    """Direct summation. Returns (g, g', terms_used); ``g'`` is None unless asked."""
    w2 = w * w
    aw2 = np.abs(w2)
    pterm = np.ones_like(w)          # (-1)^k q^{k(k+1)/2} w^{2k}
    s0 = pterm.copy()
    s1 = pterm.copy() if prime else None
    qk = np.ones_like(np.asarray(q, dtype=float))
    scale = np.maximum(np.abs(w), 1.0)
    # per-element stopping keeps every value independent of the rest of the batch
    live = np.ones(w.shape, bool)
    for k in range(1, ctrl.max_terms + 1):
        qk = qk * q
        pterm = np.where(live, -pterm * qk * w2, 0)
        s0 += pterm
        if prime:
            s1 += (2 * k + 1) * pterm
        mag = np.abs(pterm) * np.maximum(scale, 2 * k + 1 if prime else 1)
        live &= ~((mag <= ctrl.abs_tol) & (qk * aw2 < 1))
        if not live.any():
            return w * s0, s1, k + 1
    raise NonConvergence(
        f"g_q series did not reach abs_tol={ctrl.abs_tol:g} in {ctrl.max_terms} terms"
    )


def _triple_product(w, q, ctrl, prime):
    """``P(w) = w (q;q)_inf (q w^2;q)_inf (w^-2;q)_inf`` and optionally ``P'(w)``.

    The derivative keeps the smallest factor out of the running product so a
    factor vanishing at a zero of ``P`` never gets divided by.
    """
    w2 = w * w
    iw2 = 1 / w2
    aw2 = np.abs(w2)
    aiw2 = np.abs(iw2)
    q = np.asarray(q, dtype=float)
    const = np.ones_like(q)
    qm = np.ones_like(q)
    rest = np.ones_like(w)
    if prime:
        small = np.ones_like(w)
        dsmall = np.zeros_like(w)
        logd = np.zeros_like(w)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # factors approach 1 like q^m, so the budget scales with 1/(1-q)
        budget = ctrl.max_terms * math.ceil(1 / (1 - float(np.max(q, initial=0.0))))
        live = np.ones(w.shape, bool)
        for m in range(1, budget + 1):
            q_prev = qm
            qm = qm * q
            const = np.where(live, const * (1 - qm), const)
            fa = np.where(live, 1 - qm * w2, 1)
            fb = np.where(live, 1 - q_prev * iw2, 1)
            if not prime:
                rest = rest * fa * fb
            else:
                for f, df in ((fa, -2 * qm * w), (fb, 2 * q_prev * iw2 / w)):
                    swap = live & (np.abs(f) < np.abs(small))
                    rest = rest * np.where(swap, small, f)
                    logd = logd + np.where(live, np.where(swap, dsmall / small, df / f), 0)
                    small = np.where(swap, f, small)
                    dsmall = np.where(swap, df, dsmall)
            live &= ~((qm * aw2 <= ctrl.abs_tol) & (qm * aiw2 <= ctrl.abs_tol) & (qm <= ctrl.abs_tol))
            if not live.any():
                break
        else:
            raise NonConvergence(
                f"triple product did not reach abs_tol={ctrl.abs_tol:g} in {budget} factors"
            )
    if not prime:
        return const * w * rest, None, m
    prod = rest * small
    dprod = rest * (dsmall + small * logd)
    return const * w * prod, const * (prod + w * dprod), m


def _g_eval(w, q, ctrl, prime=False, method="auto"):
    """Core evaluator on arrays: returns (g, g' or None, max terms used).

    ``w`` is reduced to the closed first quadrant and mapped back with
    ``g(-conj w) = -conj g(w)`` and ``g(conj w) = conj g(w)``, so both
    symmetries hold exactly.
    """
    w = np.asarray(w, dtype=complex)
    q = np.broadcast_to(np.asarray(q, dtype=float), w.shape)
    flip_re = w.real < 0
    flip_im = w.imag < 0
    wc = np.abs(w.real) + 1j * np.abs(w.imag)

    g = np.empty_like(wc)
    gp = np.empty_like(wc) if prime else None
    terms = 0
    # the series is exact at q = 0 (one term), so only q > 0 takes the product route
    big = (np.abs(wc) > 1) & (q > 0) if method == "auto" else np.zeros(wc.shape, bool)
    if method not in ("auto", "series"):
        raise ValueError(f"unknown method {method!r}")
    if np.any(~big):
        sel = ~big
        gs, gps, n = _g_series(wc[sel], q[sel], ctrl, prime)
        g[sel] = gs
        if prime:
            gp[sel] = gps
        terms = max(terms, n)
    if np.any(big):
        wb, qb = wc[big], q[big]
        pv, pd, n1 = _triple_product(wb, qb, ctrl, prime)
        gi, gpi, n2 = _g_series(1 / wb, qb, ctrl, prime)
        g[big] = pv + gi
        if prime:
            gp[big] = pd - gpi / (wb * wb)
        terms = max(terms, n1, n2)

    g = np.where(flip_im, np.conj(g), g)
    g = np.where(flip_re, -np.conj(g), g)
    if prime:
        gp = np.where(flip_re ^ flip_im, np.conj(gp), gp)
    return g, gp, terms


def g_q(w, q, ctrl: SeriesControl | None = None, method: str = "auto"):
    """The entire function ``sum_k (-1)^k q^{k(k+1)/2} w^{2k+1}``.

    ``method="series"`` forces direct summation everywhere (used by the
    series form of ``Theta``); ``"auto"`` switches to the triple product for
    ``|w| > 1``.
    """
    q = as_q(q)
    scalar = np.ndim(w) == 0
    g, _, _ = _g_eval(w, q, _ctrl(ctrl), prime=False, method=method)
    return _unwrap(g, scalar)


def g_q_prime(w, q, ctrl: SeriesControl | None = None, method: str = "auto"):
    """Derivative ``sum_k (-1)^k q^{k(k+1)/2} (2k+1) w^{2k}``."""
    q = as_q(q)
    scalar = np.ndim(w) == 0
    _, gp, _ = _g_eval(w, q, _ctrl(ctrl), prime=True, method=method)
    return _unwrap(gp, scalar)


def g_q_and_prime(w, q, ctrl: SeriesControl | None = None):
    """``(g_q(w), g_q'(w))`` from one pass."""
    q = as_q(q)
    scalar = np.ndim(w) == 0
    g, gp, _ = _g_eval(w, q, _ctrl(ctrl), prime=True)
    return _unwrap(g, scalar), _unwrap(gp, scalar)


# ----------------------------------------------------------------------------
# Theta


@dataclass(frozen=True)
class ThetaCalibration:
    """Constant ``G`` of the product form of ``Theta``, fitted at ``w = i``."""

    q: float
    constant_G: complex


def _theta_check(w, q):
    q = as_q(q)
    if q <= 0:
        raise DomainError("Theta is degenerate at q=0")
    w = np.asarray(w, dtype=complex)
    if np.any(w == 0):
        raise DomainError("Theta has an essential singularity at w=0")
    return w, q


def _theta_series(w, q, ctrl):
    # Theta(w) = -i q^{1/4} (g_{q^2}(w) - g_{q^2}(1/w)); the q^2 is deliberate
    q2 = q * q
    gw, _, _ = _g_eval(w, q2, ctrl, method="series")
    gi, _, _ = _g_eval(1 / w, q2, ctrl, method="series")
    return -1j * q**0.25 * (gw - gi)


def _theta_product_raw(w, q, ctrl):
    """``-i q prod_{n>=1} (1 - q^{2n-2} w^-2)(1 - q^{2n} w^2) w`` without ``G``."""
    q2 = q * q
    w2 = w * w
    return -1j * q * q_pochhammer(1 / w2, q2, ctrl=ctrl) * q_pochhammer(q2 * w2, q2, ctrl=ctrl) * w


@lru_cache(maxsize=128)
def calibrate_theta(q, ctrl: SeriesControl | None = None) -> ThetaCalibration:
    """Fit ``G`` so the product form matches the series form at ``w = i``."""
    w, q = _theta_check(1j, q)
    ctrl = _ctrl(ctrl)
    ratio = _theta_series(w, q, ctrl) / _theta_product_raw(w, q, ctrl)
    return ThetaCalibration(q=q, constant_G=complex(ratio))


def theta_big(w, q, form: str = "series", ctrl: SeriesControl | None = None):
    """Theta function ``-i q^{1/4} sum_n (-1)^n q^{n^2+n} w^{2n+1}``.

    ``form="series"`` sums the bi-infinite series as two ``g_{q^2}`` halves;
    ``form="product"`` uses the product with the calibrated constant.  Zeros
    sit exactly at ``w = +-q^k`` for integer ``k``.
    """
    scalar = np.ndim(w) == 0
    w, q = _theta_check(w, q)
    ctrl = _ctrl(ctrl)
    if form == "series":
        out = _theta_series(w, q, ctrl)
    elif form == "product":
        out = calibrate_theta(q, ctrl).constant_G * _theta_product_raw(w, q, ctrl)
    else:
        raise ValueError(f"form must be 'series' or 'product', got {form!r}")
    return _unwrap(np.asarray(out), scalar)
