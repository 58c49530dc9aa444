"""Cauchy transforms of the semicircle and q-Gaussian laws, the inverse of
``g_q`` on the lower half-plane, and the Voiculescu transform.

    G_{f_q} = g_q o G_s,    F = 1/G_{f_q},    phi(z) = F^{-1}(z) - z

``F^{-1}(z) = G_s^{-1}(g_q^{-1}(1/z))`` with ``G_s^{-1}(u) = u + 1/u``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import BranchEscape, DomainError, NoConvergence
from .qseries import SeriesControl, _ctrl, _g_eval, _unwrap, as_q


class BranchTag(enum.Enum):
    """Which sheet of ``G_s`` to use below the real axis."""

    UPPER_PRINCIPAL = "upper"
    CONTINUED_THROUGH_CUT = "continued"


UPPER = BranchTag.UPPER_PRINCIPAL
CONTINUED = BranchTag.CONTINUED_THROUGH_CUT


@dataclass(frozen=True)
class InversionPolicy:
    """Newton / continuation settings for :func:`invert_g`.

    ``continuation_steps`` fixes the largest step in ``q``; steps are halved
    on rejection down to ``min_step_fraction * q``.
    """

    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    continuation_steps: int = 64
    min_step_fraction: float = 1e-9
    derivative_floor: float = 1e-14


DEFAULT_POLICY = InversionPolicy()

OK, NO_CONVERGENCE, BRANCH_ESCAPE = 0, 1, 2


# ----------------------------------------------------------------------------
# semicircle


def _sqrt_prod(z):
    # sqrt(z-2) sqrt(z+2) with principal roots: cut exactly on [-2, 2]
    s = np.sqrt(z - 2) * np.sqrt(z + 2)
    on_cut = (z.imag == 0) & (np.abs(z.real) < 2)
    # boundary value from the upper half-plane
    return np.where(on_cut, 1j * np.sqrt(np.maximum(4 - z.real**2, 0.0)), s)


def _small_root(z, s):
    # (z - s)/2 without cancellation: the two roots multiply to 1
    plus, minus = z + s, z - s
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(plus) >= np.abs(minus), 2 / plus, minus / 2)


def semicircle_cauchy(z, branch: BranchTag = UPPER):
    """Cauchy transform of the semicircle law.

    ``UPPER_PRINCIPAL`` is ``(z - s(z))/2`` (decays like ``1/z``, the genuine
    transform off the real line).  ``CONTINUED_THROUGH_CUT`` is the analytic
    continuation of the upper-half-plane transform through ``(-2, 2)``,
    ``(z + s(z))/2`` on ``Im z <= 0``; it grows like ``z``.
    """
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    s = _sqrt_prod(z)
    if branch is UPPER:
        out = _small_root(z, s)
    elif branch is CONTINUED:
        if np.any(z.imag > 0):
            raise DomainError("the continued branch lives on the closed lower half-plane")
        on_cut = (z.imag == 0) & (np.abs(z.real) < 2)
        out = np.where(on_cut, _small_root(z, s), _small_root(z, -s))
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return _unwrap(out, scalar)


def semicircle_cauchy_inverse(w):
    """``w + 1/w``: inverse of ``G_s`` glued across ``(-2, 2)``."""
    scalar = np.ndim(w) == 0
    w = np.asarray(w, dtype=complex)
    if np.any(w == 0):
        raise DomainError("G_s^{-1} is undefined at 0")
    return _unwrap(w + 1 / w, scalar)


def q_gaussian_cauchy(z, q, branch: BranchTag = UPPER, ctrl: SeriesControl | None = None):
    """``G_{f_q}(z) = g_q(G_s(z))``."""
    q = as_q(q)
    scalar = np.ndim(z) == 0
    gs = semicircle_cauchy(np.asarray(z, dtype=complex), branch)
    out, _, _ = _g_eval(gs, q, _ctrl(ctrl))
    return _unwrap(out, scalar)


def f_transform(z, q, ctrl: SeriesControl | None = None):
    """``F(z) = 1/G_{f_q}(z)`` on the upper half-plane."""
    return 1 / q_gaussian_cauchy(z, q, UPPER, ctrl)


# ----------------------------------------------------------------------------
# inversion of g_q


@dataclass
class InversionResult:
    """Per-target outcome of a batched inversion.

    ``status`` holds ``OK``, ``NO_CONVERGENCE`` or ``BRANCH_ESCAPE``; failed
    entries keep their last iterate in ``u``.
    """

    u: np.ndarray
    status: np.ndarray
    residual: np.ndarray
    steps: np.ndarray
    terms: int


def _newton(x, t, q, tol, iters, ctrl, floor):
    """Batched Newton on ``g_q(x) = t``.  Returns iterate, convergence mask,
    the first two step lengths (for the contraction test) and terms used."""
    n = x.size
    conv = np.zeros(n, bool)
    d1 = np.full(n, np.inf)
    d2 = np.full(n, np.nan)
    active = np.arange(n)
    terms = 0
    for it in range(iters):
        g, gp, nt = _g_eval(x[active], q[active], ctrl, prime=True)
        terms = max(terms, nt)
        res = g - t[active]
        done = np.abs(res) <= tol[active]
        conv[active[done]] = True
        keep = ~done & (np.abs(gp) > floor)
        active, res, gp = active[keep], res[keep], gp[keep]
        if not active.size:
            break
        dx = res / gp
        if it == 0:
            d1[active] = np.abs(dx)
        elif it == 1:
            d2[active] = np.abs(dx)
        x[active] -= dx
    return x, conv, d1, d2, terms


def invert_g_batch(targets, q, policy: InversionPolicy | None = None,
                   ctrl: SeriesControl | None = None) -> InversionResult:
    """Solve ``g_q(u) = t`` for every ``t`` in the lower half-plane, on the sheet
    that is the identity at ``q = 0``.

    Homotopy in ``q``: start from ``u = t`` at ``q = 0`` and walk ``q`` up with a
    secant predictor and a Newton corrector.  A step is accepted only if Newton
    converges, contracts (second step at most half the first) and stays in the
    lower half-plane; otherwise the step in ``q`` is halved.  Failures are
    reported in ``status``, never raised.

    The residual target is ``newton_tol * max(1, |t|)``: for very large ``t`` an
    absolute ``1e-12`` sits below the rounding floor of ``g_q`` itself.
    """
    q = as_q(q)
    policy = policy or DEFAULT_POLICY
    ctrl = _ctrl(ctrl)
    t = np.atleast_1d(np.asarray(targets, dtype=complex)).ravel()
    if np.any(~(t.imag < 0)):
        raise DomainError("invert_g needs targets strictly in the lower half-plane")
    n = t.size
    u = t.copy()
    status = np.zeros(n, int)
    steps = np.zeros(n, int)
    tol = policy.newton_tol * np.maximum(1.0, np.abs(t))
    terms = 0
    if q > 0 and n:
        hmax = q / policy.continuation_steps
        hmin = q * policy.min_step_fraction
        qc = np.zeros(n)
        h = np.full(n, hmax)
        pu = np.full(n, np.nan + 0j)
        pq = np.full(n, np.nan)
        escaped = np.zeros(n, bool)
        while True:
            idx = np.flatnonzero((qc < q) & (status == OK))
            if not idx.size:
                break
            qn = np.minimum(qc[idx] + h[idx], q)
            has_prev = np.isfinite(pq[idx])
            with np.errstate(invalid="ignore", divide="ignore"):
                slope = np.where(has_prev, (u[idx] - pu[idx]) / (qc[idx] - pq[idx]), 0)
            x0 = u[idx] + slope * (qn - qc[idx])
            x, conv, d1, d2, nt = _newton(x0.copy(), t[idx], qn, tol[idx], 8, ctrl,
                                          policy.derivative_floor)
            terms = max(terms, nt)
            contract = ~(d2 > 0.5 * d1)
            lower = x.imag < 0
            ok = conv & contract & lower & np.isfinite(x)
            acc = idx[ok]
            pu[acc], pq[acc] = u[acc], qc[acc]
            u[acc], qc[acc] = x[ok], qn[ok]
            h[acc] = np.minimum(1.5 * h[acc], hmax)
            steps[acc] += 1
            rej = idx[~ok]
            escaped[rej] = (conv & ~lower)[~ok]
            h[rej] *= 0.5
            dead = rej[h[rej] < hmin]
            status[dead] = np.where(escaped[dead], BRANCH_ESCAPE, NO_CONVERGENCE)

        good = np.flatnonzero(status == OK)
        if good.size:
            x, conv, _, _, nt = _newton(u[good].copy(), t[good], np.full(good.size, q), tol[good],
                                        policy.newton_max_iter, ctrl, policy.derivative_floor)
            terms = max(terms, nt)
            u[good] = x
            status[good[~conv]] = NO_CONVERGENCE
            status[good[conv & ~(x.imag < 0)]] = BRANCH_ESCAPE

    g, _, nt = _g_eval(u, q, ctrl)
    terms = max(terms, nt)
    return InversionResult(u=u, status=status, residual=np.abs(g - t), steps=steps, terms=terms)


def _raise_for(status):
    if np.any(status == BRANCH_ESCAPE):
        raise BranchEscape("inverse iterate crossed into the upper half-plane")
    if np.any(status != OK):
        raise NoConvergence("continuation/Newton failed; tighten the inversion policy")


def invert_g(target, q, policy: InversionPolicy | None = None, ctrl: SeriesControl | None = None):
    """Inverse of ``g_q`` on the lower half-plane (the branch fixing 0).

    Raises :class:`NoConvergence` or :class:`BranchEscape` on failure; use
    :func:`invert_g_batch` to get per-point status instead.
    """
    scalar = np.ndim(target) == 0
    shape = np.shape(target)
    res = invert_g_batch(target, q, policy, ctrl)
    _raise_for(res.status)
    return _unwrap(res.u.reshape(shape), scalar)


def _check_upper(z):
    z = np.asarray(z, dtype=complex)
    if np.any(~(z.imag > 0)):
        raise DomainError("argument must lie in the upper half-plane")
    return z


def f_transform_inverse(w, q, policy: InversionPolicy | None = None, ctrl: SeriesControl | None = None):
    """``F^{-1}(w) = G_s^{-1}(g_q^{-1}(1/w))`` for ``w`` in the upper half-plane."""
    scalar = np.ndim(w) == 0
    w = _check_upper(w)
    u = invert_g(1 / w, q, policy, ctrl)
    return _unwrap(np.asarray(semicircle_cauchy_inverse(u)), scalar)


@dataclass
class PhiBatch:
    """Voiculescu transform on many points plus the inversion diagnostics."""

    phi: np.ndarray
    status: np.ndarray
    residual: np.ndarray
    terms: int


def voiculescu_phi_batch(z, q, policy: InversionPolicy | None = None,
                         ctrl: SeriesControl | None = None) -> PhiBatch:
    """``phi(z) = F^{-1}(z) - z`` for an array of ``z``; failures give NaN."""
    z = _check_upper(z)
    shape = z.shape
    zf = z.ravel()
    res = invert_g_batch(1 / zf, q, policy, ctrl)
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = res.u + 1 / res.u - zf
    phi = np.where(res.status == OK, phi, np.nan + 1j * np.nan)
    return PhiBatch(phi=phi.reshape(shape), status=res.status.reshape(shape),
                    residual=res.residual.reshape(shape), terms=res.terms)


def voiculescu_phi(z, q, policy: InversionPolicy | None = None, ctrl: SeriesControl | None = None):
    """Voiculescu transform of the q-Gaussian on the upper half-plane."""
    scalar = np.ndim(z) == 0
    out = voiculescu_phi_batch(z, q, policy, ctrl)
    _raise_for(out.status)
    return _unwrap(out.phi, scalar)
