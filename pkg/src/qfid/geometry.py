"""Curve and contour geometry of ``g_q``: real critical points, the preimage
curve ``gamma_q`` of ``[0, inf)``, argument-principle zero counting and a
sampled injectivity witness on the domain bounded by ``gamma_q`` and its
mirror image.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoneFound, OnContourZero, StallError
from .qseries import SeriesControl, _ctrl, _g_eval, as_q

TWO_PI = 2 * math.pi


def _g(w, q, ctrl):
    return _g_eval(np.asarray(w, dtype=complex), q, ctrl)[0]


def _g_and_prime(w, q, ctrl):
    g, gp, _ = _g_eval(np.asarray(w, dtype=complex), q, ctrl, prime=True)
    return g, gp


def _g_second(w, q, ctrl):
    # central difference of g'; only used for steering, never for residuals
    w = np.asarray(w, dtype=complex)
    h = 1e-5 * np.maximum(1.0, np.abs(w))
    _, gp_plus, _ = _g_eval(w + h, q, ctrl, prime=True)
    _, gp_minus, _ = _g_eval(w - h, q, ctrl, prime=True)
    return (gp_plus - gp_minus) / (2 * h)


def taylor_coefficients(center: complex, q, radius: float, n_coeffs: int = 8,
                        n_samples: int = 64, ctrl: SeriesControl | None = None) -> np.ndarray:
    """Taylor coefficients ``a_0..a_{n_coeffs-1}`` of ``g_q`` at ``center`` from
    an FFT of samples on a circle (trapezoidal Cauchy integrals)."""
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    roots = np.exp(TWO_PI * 1j * np.arange(n_samples) / n_samples)
    vals = _g(center + radius * roots, q, ctrl)
    coeffs = np.fft.fft(vals) / n_samples
    return coeffs[:n_coeffs] / radius ** np.arange(n_coeffs)


# ----------------------------------------------------------------------------
# critical points on the real axis


def real_critical_points(q, search_bound: float = 4.0, ctrl: SeriesControl | None = None,
                         n_grid: int = 4000) -> list[float]:
    """Zeros of ``g_q'`` in ``(0, search_bound]``, ascending.

    Sign changes on a uniform grid are bisected to a small bracket and then
    polished by Newton.  The first entry is ``d_q``.
    """
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    if q == 0:
        raise NoneFound("g_0' is identically 1")
    xs = np.linspace(0.0, search_bound, n_grid + 1)[1:]
    _, gp = _g_and_prime(xs, q, ctrl)
    f = gp.real
    roots = []
    for i in np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0):
        roots.append(_polish_critical(xs[i], xs[i + 1], q, ctrl))
    if not roots:
        raise NoneFound(f"no zero of g_q' in (0, {search_bound}] for q={q}")
    return roots


def _gp_real(x, q, ctrl):
    return float(_g_and_prime(x, q, ctrl)[1].real)


def _polish_critical(lo, hi, q, ctrl):
    flo = _gp_real(lo, q, ctrl)
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        fm = _gp_real(mid, q, ctrl)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(8):
        fx = _gp_real(x, q, ctrl)
        step = fx / float(_g_second(x, q, ctrl).real)
        x_new = x - step
        if not lo - 1e-9 <= x_new <= hi + 1e-9:
            break
        x = x_new
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return float(x)


def smallest_critical_point(q, ctrl: SeriesControl | None = None, start_bound: float = 4.0) -> float:
    """``d_q``, enlarging the search bound as needed (``d_q`` grows like ``q^{-1/2}``)."""
    bound = start_bound
    while bound < 1e4:
        try:
            return real_critical_points(q, bound, ctrl)[0]
        except NoneFound:
            bound *= 4
    raise NoneFound(f"no real critical point found for q={q}")


# ----------------------------------------------------------------------------
# gamma_q


@dataclass
class PathTrace:
    """Sampled curve ``gamma(t)`` with ``g_q(gamma(t)) = t``."""

    q: float
    parameters: np.ndarray
    points: np.ndarray
    residuals: np.ndarray
    critical_points: list = field(default_factory=list)
    terminated_by: str = "t_max"

    @property
    def n_critical(self) -> int:
        return len(self.critical_points)

    def mirror(self) -> np.ndarray:
        """Points of ``-conj(gamma)``, the left half of the boundary."""
        return -np.conj(self.points)

    def to_csv(self, fh=None, with_mirror: bool = False) -> str | None:
        """Write columns ``t, re, im, residual`` (plus ``mirror_re, mirror_im``)."""
        own = fh is None
        fh = io.StringIO() if own else fh
        writer = csv.writer(fh, lineterminator="\n")
        header = ["t", "re", "im", "residual"]
        if with_mirror:
            header += ["mirror_re", "mirror_im"]
        writer.writerow(header)
        mirror = self.mirror()
        for j, (t, p, r) in enumerate(zip(self.parameters, self.points, self.residuals)):
            row = [repr(float(t)), repr(float(p.real)), repr(float(p.imag)), repr(float(r))]
            if with_mirror:
                row += [repr(float(mirror[j].real)), repr(float(mirror[j].imag))]
            writer.writerow(row)
        return fh.getvalue() if own else None


def _branch_out(c, incoming, q, ctrl):
    """Leave the critical point ``c`` along the preimage of increasing real values
    that turns least clockwise from ``incoming`` ("first to the right").

    Returns ``(start point, its parameter t, multiplicity)``."""
    r = 1e-2 * max(1.0, abs(c))
    a = taylor_coefficients(c, q, r, n_coeffs=8, ctrl=ctrl)
    scaled = np.abs(a[1:]) * r ** np.arange(1, 8)
    significant = np.flatnonzero(scaled > 1e-6 * scaled.max())
    n = int(significant[0]) + 1
    if n < 2:
        raise StallError("branch point is not critical")
    an = a[n]
    theta_in = math.atan2(incoming.imag, incoming.real)
    best = None
    for j in range(n):
        theta = (-np.angle(an) + TWO_PI * j) / n
        cw = (theta_in - theta) % TWO_PI
        if cw > 1e-6 and (best is None or cw < best[0]):
            best = (cw, theta)
    rho = 0.1 * r
    t_c = float(_g(c, q, ctrl).real)
    t1 = t_c + abs(an) * rho**n
    w = c + rho * np.exp(1j * best[1])
    w = _correct(w, t1, q, ctrl, tol=1e-13 * max(1.0, t1), iters=30)
    if w is None:
        raise StallError(f"could not leave the critical point {c}")
    return w, t1, n


def _correct(w, t, q, ctrl, tol, iters=8):
    for _ in range(iters):
        g, gp = _g_and_prime(w, q, ctrl)
        res = complex(g) - t
        if abs(res) <= tol:
            return complex(w)
        if abs(gp) < 1e-300:
            return None
        w = complex(w) - res / complex(gp)
    return None


def _locate_critical(w, q, ctrl, iters=30):
    for _ in range(iters):
        gp = complex(_g_and_prime(w, q, ctrl)[1])
        step = gp / complex(_g_second(w, q, ctrl))
        w -= step
        if abs(step) <= 1e-15 * max(1.0, abs(w)):
            return w
    return None


def _real_preimage(t, d, q, ctrl):
    lo, hi = 0.0, d
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(_g(mid, q, ctrl).real) < t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * d:
            break
    return hi


def trace_gamma(q, t_max: float, trace_tol: float = 1e-9, escape_radius: float = 1e3,
                max_step: float = 0.05, n_real: int = 200,
                ctrl: SeriesControl | None = None) -> PathTrace:
    """Trace the branch of ``g_q^{-1}([0, inf))`` that starts at 0.

    The curve follows the real axis up to ``d_q``, turns right into the
    lower half-plane, and then is continued in ``t`` (Euler predictor, Newton
    corrector, spatial step ``max_step * max(1, |w|)``).  Any further critical
    point met on the way is resolved from its Taylor coefficients with the
    same right-turn rule.  Stops at ``t_max`` or once ``|gamma| > escape_radius``.
    If ``t_max <= g_q(d_q)`` the result is just the real segment.
    """
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    if q == 0:
        raise DomainError("at q=0 the preimage of [0, inf) is the real half-line itself")
    if t_max <= 0:
        raise DomainError("t_max must be positive")
    d = smallest_critical_point(q, ctrl)
    t_d = float(_g(d, q, ctrl).real)
    if t_max <= t_d:
        # the whole requested piece lies on [0, d_q], where g_q increases
        x_end = _real_preimage(t_max, d, q, ctrl)
        xs = np.linspace(0.0, x_end, n_real + 1)
        pts = xs.astype(complex)
        ts = _g(pts, q, ctrl).real
        return PathTrace(q=q, parameters=ts, points=pts, residuals=np.zeros_like(ts),
                         critical_points=[], terminated_by="t_max")

    xs = np.linspace(0.0, d, n_real + 1)
    ts = list(_g(xs, q, ctrl).real)
    pts = [complex(x) for x in xs]
    crit = [complex(d)]

    w, t, _ = _branch_out(complex(d), 1 + 0j, q, ctrl)
    pts.append(w)
    ts.append(t)
    terminated = "t_max"
    h = max_step * max(1.0, abs(w))
    while t < t_max:
        if abs(w) > escape_radius:
            terminated = "escape_radius"
            break
        g, gp = (complex(v) for v in _g_and_prime(w, q, ctrl))
        rho = abs(gp) / abs(complex(_g_second(w, q, ctrl)))
        if rho < 2 * h:
            c = _locate_critical(w, q, ctrl)
            heading = w - pts[-2]
            if c is not None and abs(c - w) < 3 * h and ((c - w) * heading.conjugate()).real > 0:
                gc = complex(_g(c, q, ctrl))
                if abs(gc.imag) <= trace_tol and gc.real > t:
                    pts.append(c)
                    ts.append(gc.real)
                    crit.append(c)
                    w, t, _ = _branch_out(c, heading / abs(heading), q, ctrl)
                    pts.append(w)
                    ts.append(t)
                    h = max_step * max(1.0, abs(w))
                    continue
        hs = min(h, 0.5 * rho)
        dt = min(hs * abs(gp), t_max - t)
        target = t + dt
        pred = w + dt / gp
        new = _correct(pred, target, q, ctrl, tol=0.1 * trace_tol)
        if (new is not None and abs(new - pred) <= 0.3 * hs
                and new.imag <= 1e-12 and new.real >= -1e-12):
            w, t = new, target
            pts.append(w)
            ts.append(t)
            h = min(1.5 * h, max_step * max(1.0, abs(w)))
        else:
            h *= 0.5
            if h < 1e-12 * max(1.0, abs(w)):
                raise StallError(f"continuation stalled at t={t:.6g}, w={w}")

    pts = np.array(pts)
    ts = np.array(ts)
    res = np.abs(_g(pts, q, ctrl) - ts)
    return PathTrace(q=q, parameters=ts, points=pts, residuals=res, critical_points=crit,
                     terminated_by=terminated)


# ----------------------------------------------------------------------------
# contours and zero counting


@dataclass
class Contour:
    """Closed counter-clockwise polyline; ``vertices[0] == vertices[-1]``."""

    vertices: np.ndarray
    arc_slice: slice | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex)
        if v[0] != v[-1]:
            v = np.append(v, v[0])
        self.vertices = v

    def signed_area(self) -> float:
        v = self.vertices
        return 0.5 * float(np.sum(v[:-1].real * v[1:].imag - v[1:].real * v[:-1].imag))

    def is_simple(self) -> bool:
        """Pairwise segment intersection test (quadratic; fine at desk scale)."""
        v = self.vertices
        a, b = v[:-1], v[1:]
        m = len(a)
        for i in range(m):
            others = np.arange(i + 2, m)
            if i == 0:
                others = others[others != m - 1]
            if not others.size:
                continue
            if np.any(_segments_cross(a[i], b[i], a[others], b[others])):
                return False
        return True

    @classmethod
    def circle(cls, center: complex, radius: float, n: int = 256) -> "Contour":
        theta = TWO_PI * np.arange(n + 1) / n
        return cls(center + radius * np.exp(1j * theta))


def _cross(o, a, b):
    return (a - o).real * (b - o).imag - (a - o).imag * (b - o).real


def _segments_cross(p1, p2, p3, p4):
    d1 = _cross(p3, p4, p1)
    d2 = _cross(p3, p4, p2)
    d3 = _cross(p1, p2, p3)
    d4 = _cross(p1, p2, p4)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def count_zeros_contour(q, contour: Contour, target: complex = 0.0,
                        ctrl: SeriesControl | None = None, max_depth: int = 40,
                        min_modulus: float = 1e-8, _values: np.ndarray | None = None) -> int:
    """Winding number of ``g_q - target`` along ``contour``.

    Argument increments are summed edge by edge; an edge whose increment
    reaches ``pi/2`` is bisected until it does not.  Raises
    :class:`OnContourZero` if ``|g_q - target|`` drops below ``min_modulus``
    on the contour or refinement runs out of depth.
    """
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    v = contour.vertices
    vals = (_g(v, q, ctrl) if _values is None else _values) - target
    if np.any(np.abs(vals) < min_modulus):
        raise OnContourZero("g_q - target (numerically) vanishes on a contour vertex")
    steps = np.angle(vals[1:] / vals[:-1])
    total = float(np.sum(steps[np.abs(steps) < math.pi / 2]))
    # (a, b, f(a), f(b), depth) for every edge needing refinement
    stack = [(v[i], v[i + 1], vals[i], vals[i + 1], 0)
             for i in np.flatnonzero(np.abs(steps) >= math.pi / 2)]
    while stack:
        a, b, fa, fb, depth = stack.pop()
        if depth >= max_depth:
            raise OnContourZero("argument refinement did not resolve an edge")
        m = 0.5 * (a + b)
        fm = complex(_g(m, q, ctrl)) - target
        if abs(fm) < min_modulus:
            raise OnContourZero("g_q - target (numerically) vanishes on the contour")
        for x0, x1, f0, f1 in ((a, m, fa, fm), (m, b, fm, fb)):
            step = float(np.angle(f1 / f0))
            if abs(step) < math.pi / 2:
                total += step
            else:
                stack.append((x0, x1, f0, f1, depth + 1))
    winding = total / TWO_PI
    k = round(winding)
    if abs(winding - k) > 1e-6:
        raise OnContourZero(f"accumulated argument {winding:.8f} turns is not an integer")
    return int(k)


def x_q_contour(trace: PathTrace, n_arc: int = 400) -> Contour:
    """Counter-clockwise boundary of the traced part of ``X_q``: back along
    ``gamma_q`` to 0, out along its mirror image, and home on the circular
    arc of radius ``|gamma(t_max)|`` through the lower half-plane."""
    pts = trace.points
    end = pts[-1]
    radius = abs(end)
    right = pts[::-1]
    left = -np.conj(pts[1:])
    theta_end = math.atan2(end.imag, end.real)
    theta_start = -math.pi - theta_end
    arc_theta = np.linspace(theta_start, theta_end, n_arc + 1)[1:]
    arc = radius * np.exp(1j * arc_theta)
    arc[-1] = end
    start_arc = len(right) + len(left)
    verts = np.concatenate([right, left, arc])
    return Contour(verts, arc_slice=slice(start_arc - 1, len(verts)))


@dataclass
class InjectivityReport:
    """Outcome of :func:`injectivity_witness`."""

    q: float
    samples: int
    max_target_modulus: float
    counts: list
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations


def injectivity_witness(q, region_contour: Contour, samples: int, seed: int = 0,
                        ctrl: SeriesControl | None = None,
                        max_target_modulus: float | None = None) -> InjectivityReport:
    """Draw ``samples`` random targets ``v`` in the lower half-plane and count the
    preimages of each inside ``region_contour``; every count should be 1.

    Unless given, the target radius is 0.9 times the smaller of ``min |g_q|``
    on the closing arc and the largest real value reached on the contour.
    """
    q = as_q(q)
    ctrl = _ctrl(ctrl)
    verts = region_contour.vertices
    vals = _g(verts, q, ctrl)
    if max_target_modulus is None:
        if region_contour.arc_slice is not None:
            arc_min = float(np.min(np.abs(vals[region_contour.arc_slice])))
            max_target_modulus = 0.9 * min(arc_min, float(np.max(np.abs(vals.real))))
        else:
            max_target_modulus = 0.9 * float(np.min(np.abs(vals)))
    rng = np.random.default_rng(seed)
    radii = max_target_modulus * np.sqrt(rng.uniform(0.0, 1.0, samples))
    angles = -math.pi * rng.uniform(0.02, 0.98, samples)
    targets = radii * np.exp(1j * angles)
    counts, violations = [], []
    for v in targets:
        n = count_zeros_contour(q, region_contour, complex(v), ctrl, _values=vals)
        counts.append(n)
        if n != 1:
            violations.append({"target": complex(v), "count": n})
    return InjectivityReport(q=q, samples=samples, max_target_modulus=max_target_modulus,
                             counts=counts, violations=violations)
