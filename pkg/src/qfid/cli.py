"""Command line front end.

Exit codes: 0 success / pass, 1 numerical or certification failure, 2 usage
error.  Every subcommand writes one CSV or JSON document to ``--out`` (or
stdout) and nothing else.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from .certify import DEFAULT_TOLERANCE, GridSpec, certify_fid, parse_grid, parse_sweep
from .density import (integrate_density, jacobi_moments, power_kernel, q_gaussian_density,
                      q_gaussian_density_theta, select_theta_reading)
from .errors import DomainError, QFidError
from .geometry import trace_gamma
from .qseries import Q_MAX, SeriesControl, calibrate_theta, theta_big
from .transforms import (CONTINUED, UPPER, InversionPolicy, f_transform, q_gaussian_cauchy,
                         semicircle_cauchy, voiculescu_phi_batch)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
THETA_ZERO_LIMIT = 1e-8


class UsageError(Exception):
    pass


def _q_arg(value: str) -> float:
    try:
        q = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"q must be a number, got {value!r}")
    return q


def _check_q(q, positive=False):
    lo = "(0" if positive else "[0"
    if not (0 <= q <= Q_MAX) or (positive and q == 0):
        raise UsageError(f"q={q} outside the valid range {lo}, {Q_MAX}]")


@contextmanager
def _target(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_csv(path, header, rows):
    with _target(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, doc):
    with _target(path) as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _cplx(z):
    if z is None or (isinstance(z, complex) and (math.isnan(z.real) or math.isnan(z.imag))):
        return None
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _ctrl_from(args):
    return SeriesControl(abs_tol=args.abs_tol, max_terms=args.max_terms)


# ----------------------------------------------------------------------------
# subcommands


def cmd_density(args):
    _check_q(args.q)
    if args.n_points < 2:
        raise UsageError("--n-points must be at least 2")
    ctrl = _ctrl_from(args)
    xs = np.linspace(-2.0, 2.0, args.n_points)
    fn = q_gaussian_density if args.form == "chebyshev" else q_gaussian_density_theta
    fs = fn(xs, args.q, ctrl)
    if args.format == "csv":
        _write_csv(args.out, ["x", "f"], [(repr(float(x)), repr(float(f))) for x, f in zip(xs, fs)])
    else:
        rep = select_theta_reading(args.q, ctrl)
        _write_json(args.out, {
            "q": args.q, "form": args.form,
            "series_control": {"abs_tol": ctrl.abs_tol, "max_terms": ctrl.max_terms},
            "theta_reading": {"reading": rep.reading, "calibration_constant": rep.calibration_constant,
                              "max_relative_gap": rep.max_relative_gap},
            "rows": [{"x": float(x), "f": float(f)} for x, f in zip(xs, fs)],
        })
    return EXIT_OK


def _parse_complex(s):
    try:
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {s!r}")


def cmd_transform_eval(args):
    _check_q(args.q)
    ctrl = _ctrl_from(args)
    branch = UPPER if args.branch == "upper" else CONTINUED
    zs = np.array(args.z or [1 + 1j], dtype=complex)
    if branch is CONTINUED and np.any(zs.imag > 0):
        raise UsageError("the continued branch needs Im z <= 0")
    gs = semicircle_cauchy(zs, branch)
    gq = q_gaussian_cauchy(zs, args.q, branch, ctrl)
    upper = zs.imag > 0
    phi = np.full(zs.shape, complex("nan+nanj"))
    status = np.zeros(zs.shape, int)
    ft = np.full(zs.shape, complex("nan+nanj"))
    if np.any(upper):
        batch = voiculescu_phi_batch(zs[upper], args.q, InversionPolicy(newton_tol=args.newton_tol), ctrl)
        phi[upper] = batch.phi
        status[upper] = batch.status
        ft[upper] = f_transform(zs[upper], args.q, ctrl)
    rows = [{"z": _cplx(z), "G_s": _cplx(a), "G_fq": _cplx(b), "F": _cplx(c), "phi": _cplx(p)}
            for z, a, b, c, p in zip(zs, gs, gq, ft, phi)]
    if args.format == "json":
        _write_json(args.out, {"q": args.q, "branch": args.branch, "newton_tol": args.newton_tol,
                               "values": rows})
    else:
        header = ["z_re", "z_im", "gs_re", "gs_im", "gfq_re", "gfq_im", "f_re", "f_im", "phi_re", "phi_im"]
        flat = []
        for z, a, b, c, p in zip(zs, gs, gq, ft, phi):
            flat.append([repr(float(v)) for w in (z, a, b, c, p) for v in (w.real, w.imag)])
        _write_csv(args.out, header, flat)
    return EXIT_FAIL if np.any(status != 0) else EXIT_OK


def cmd_certify(args):
    if (args.q is None) == (args.sweep is None):
        raise UsageError("give exactly one of --q or --sweep")
    try:
        qs = [args.q] if args.q is not None else parse_sweep(args.sweep)
        grid = parse_grid(args.grid, args.im_spacing) if args.grid else GridSpec(im_spacing=args.im_spacing)
    except DomainError as exc:
        raise UsageError(str(exc))
    for q in qs:
        _check_q(q)
    policy = InversionPolicy(newton_tol=args.newton_tol, continuation_steps=args.steps)
    ctrl = _ctrl_from(args)
    certs = [certify_fid(q, grid, args.tol, policy, ctrl, workers=args.workers) for q in qs]
    if args.format == "json":
        docs = [c.to_dict() for c in certs]
        _write_json(args.out, docs[0] if args.q is not None else docs)
    else:
        _write_csv(args.out, ["q", "pass", "max_im_phi", "violations", "inversion_failures", "runtime_ms"],
                   [(c.q, int(c.passed), c.max_im_phi, len(c.violations), len(c.inversion_failures),
                     c.runtime_ms) for c in certs])
    return EXIT_OK if all(c.passed for c in certs) else EXIT_FAIL


def cmd_trace(args):
    _check_q(args.q, positive=True)
    tr = trace_gamma(args.q, args.t_max, trace_tol=args.trace_tol, ctrl=_ctrl_from(args))
    if args.format == "csv":
        with _target(args.out) as fh:
            tr.to_csv(fh, with_mirror=True)
    else:
        _write_json(args.out, {
            "q": tr.q, "t_max": args.t_max, "trace_tol": args.trace_tol,
            "terminated_by": tr.terminated_by,
            "critical_points": [_cplx(c) for c in tr.critical_points],
            "max_residual": float(tr.residuals.max()),
            "t": tr.parameters.tolist(), "re": tr.points.real.tolist(), "im": tr.points.imag.tolist(),
            "residual": tr.residuals.tolist(),
            "mirror_re": tr.mirror().real.tolist(), "mirror_im": tr.mirror().imag.tolist(),
        })
    return EXIT_OK if tr.residuals.max() <= args.trace_tol else EXIT_FAIL


def theta_rounding_floor(w, q, ctrl=None):
    """``eps * |w Theta'(w)|``: the size of ``Theta`` at a point one rounding
    away from a zero.  Values at the predicted zeros cannot be resolved below
    this in double precision, whatever the evaluation method."""
    h = 1e-6 * abs(w)
    deriv = (theta_big(w + h, q, "product", ctrl) - theta_big(w - h, q, "product", ctrl)) / (2 * h)
    return float(np.finfo(float).eps * abs(w) * abs(deriv))


def theta_zero_report(q, n_zeros, ctrl=None, ring_radius=1.3, ring_points=64):
    """Magnitudes of ``Theta`` at its predicted zeros plus series/product agreement."""
    cal = calibrate_theta(q, ctrl)
    entries = []
    for n in range(1, n_zeros + 1):
        for kind, w0 in ((f"q^{n - 1}", q ** (n - 1)), (f"q^-{n}", q ** (-n))):
            for sign in (1, -1):
                w = sign * w0
                entries.append({
                    "n": n, "point": ("-" if sign < 0 else "+") + kind, "w": w,
                    "abs_theta": abs(theta_big(w, q, "product", ctrl)),
                    "abs_theta_series": abs(theta_big(w, q, "series", ctrl)),
                    "rounding_floor": theta_rounding_floor(w, q, ctrl),
                })
    ring = ring_radius * np.exp(2j * np.pi * np.arange(ring_points) / ring_points)
    gap = float(np.max(np.abs(theta_big(ring, q, "series", ctrl) - theta_big(ring, q, "product", ctrl))))
    reflect = float(np.max(np.abs(theta_big(1 / ring, q, "series", ctrl) + theta_big(ring, q, "series", ctrl))))
    return {
        "q": q, "constant_G": _cplx(cal.constant_G), "zeros": entries,
        "max_abs_theta": max(e["abs_theta"] for e in entries),
        "ring": {"radius": ring_radius, "points": ring_points, "max_series_product_gap": gap,
                 "max_reflection_defect": reflect},
    }


def cmd_theta(args):
    _check_q(args.q, positive=True)
    if args.n_zeros < 1:
        raise UsageError("--n-zeros must be positive")
    rep = theta_zero_report(args.q, args.n_zeros, _ctrl_from(args))
    rep["limit"] = THETA_ZERO_LIMIT
    _write_json(args.out, rep)
    return EXIT_OK if rep["max_abs_theta"] <= THETA_ZERO_LIMIT else EXIT_FAIL


def cmd_moments(args):
    _check_q(args.q)
    if args.k_max < 0:
        raise UsageError("--k-max must be non-negative")
    jac = jacobi_moments(args.k_max, args.q, args.truncation)
    quad = [integrate_density(args.q, power_kernel(k), quad_tol=args.quad_tol, ctrl=_ctrl_from(args))
            for k in range(args.k_max + 1)]
    rows = [(k, float(quad[k]), float(jac[k]), float(abs(quad[k] - jac[k]))) for k in range(args.k_max + 1)]
    if args.format == "csv":
        _write_csv(args.out, ["k", "quadrature", "jacobi", "abs_diff"], [[repr(v) for v in r] for r in rows])
    else:
        _write_json(args.out, {"q": args.q, "quad_tol": args.quad_tol,
                               "moments": [dict(zip(("k", "quadrature", "jacobi", "abs_diff"), r)) for r in rows]})
    return EXIT_OK


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qfid", description="q-Gaussian free infinite divisibility toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt):
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt)
        sp.add_argument("--abs-tol", type=float, default=1e-14, help="series term tolerance")
        sp.add_argument("--max-terms", type=int, default=512, help="series term budget")

    sp = sub.add_parser("density", help="tabulate f_q on [-2, 2]")
    sp.add_argument("--q", type=_q_arg, required=True)
    sp.add_argument("--n-points", type=int, default=201)
    sp.add_argument("--form", choices=("chebyshev", "theta"), default="chebyshev")
    common(sp, "csv")
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("transform-eval", help="G_s, G_fq, F and phi at given points")
    sp.add_argument("--q", type=_q_arg, required=True)
    sp.add_argument("--z", type=_parse_complex, action="append", help="complex point, repeatable")
    sp.add_argument("--branch", choices=("upper", "continued"), default="upper")
    sp.add_argument("--newton-tol", type=float, default=1e-12)
    common(sp, "json")
    sp.set_defaults(func=cmd_transform_eval)

    sp = sub.add_parser("certify", help="grid certificate(s) for Im phi <= tol")
    sp.add_argument("--q", type=_q_arg)
    sp.add_argument("--sweep", help="a:b:step, inclusive")
    sp.add_argument("--grid", help="re_min:re_max:im_min:im_max:nx:ny (default -10:10:1e-3:10:200:100)")
    sp.add_argument("--im-spacing", choices=("logarithmic", "linear"), default="logarithmic")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE)
    sp.add_argument("--newton-tol", type=float, default=1e-12)
    sp.add_argument("--steps", type=int, default=64, help="continuation steps in q")
    sp.add_argument("--workers", type=int, default=1)
    common(sp, "json")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("trace-curve", help="trace gamma_q and its mirror image")
    sp.add_argument("--q", type=_q_arg, required=True)
    sp.add_argument("--t-max", type=float, default=100.0)
    sp.add_argument("--trace-tol", type=float, default=1e-9)
    common(sp, "csv")
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("theta", help="check the zeros of Theta")
    sp.add_argument("--q", type=_q_arg, required=True)
    sp.add_argument("--n-zeros", type=int, default=5)
    common(sp, "json")
    sp.set_defaults(func=cmd_theta)

    sp = sub.add_parser("moments", help="quadrature vs Jacobi-matrix moments")
    sp.add_argument("--q", type=_q_arg, required=True)
    sp.add_argument("--k-max", type=int, default=10)
    sp.add_argument("--truncation", type=int, default=None)
    sp.add_argument("--quad-tol", type=float, default=1e-10)
    common(sp, "csv")
    sp.set_defaults(func=cmd_moments)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError) as exc:
        print(f"qfid {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QFidError as exc:
        print(f"qfid {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
