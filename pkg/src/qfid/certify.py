"""Grid certificates that the Voiculescu transform of the q-Gaussian maps the
upper half-plane into the closed lower half-plane."""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .qseries import SeriesControl, _ctrl, as_q
from .transforms import OK, InversionPolicy, voiculescu_phi_batch

DEFAULT_TOLERANCE = 1e-9
MIN_IM = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid in the upper half-plane."""

    re_range: tuple = (-10.0, 10.0)
    im_range: tuple = (1e-3, 10.0)
    nx: int = 200
    ny: int = 100
    im_spacing: str = "logarithmic"

    def __post_init__(self):
        object.__setattr__(self, "re_range", tuple(float(v) for v in self.re_range))
        object.__setattr__(self, "im_range", tuple(float(v) for v in self.im_range))
        re_min, re_max = self.re_range
        im_min, im_max = self.im_range
        if self.nx < 1 or self.ny < 1:
            raise DomainError("nx and ny must be positive")
        if re_max < re_min or im_max < im_min:
            raise DomainError("grid ranges must be increasing")
        if im_min < MIN_IM:
            raise DomainError(f"im_min must be at least {MIN_IM:g}")
        if self.im_spacing not in ("linear", "logarithmic"):
            raise DomainError("im_spacing is 'linear' or 'logarithmic'")

    def nodes(self) -> np.ndarray:
        """Complex nodes, shape ``(ny, nx)``, rows of constant imaginary part."""
        re = np.linspace(*self.re_range, self.nx)
        if self.im_spacing == "logarithmic":
            im = np.geomspace(*self.im_range, self.ny)
        else:
            im = np.linspace(*self.im_range, self.ny)
        return re[None, :] + 1j * im[:, None]

    def refined(self) -> "GridSpec":
        return GridSpec(self.re_range, self.im_range, 2 * self.nx, 2 * self.ny, self.im_spacing)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["re_range"] = list(self.re_range)
        d["im_range"] = list(self.im_range)
        return d


@dataclass
class FidCertificate:
    """Result of :func:`certify_fid`.  ``passed`` is serialised as ``pass``."""

    q: float
    grid: GridSpec
    max_im_phi: float | None
    tolerance: float
    passed: bool
    violations: list = field(default_factory=list)
    inversion_failures: list = field(default_factory=list)
    series_terms_max: int = 0
    runtime_ms: int = 0

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "grid": self.grid.to_dict(),
            "max_im_phi": self.max_im_phi,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "violations": list(self.violations),
            "inversion_failures": list(self.inversion_failures),
            "series_terms_max": self.series_terms_max,
            "runtime_ms": self.runtime_ms,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "FidCertificate":
        g = d["grid"]
        return cls(
            q=d["q"],
            grid=GridSpec(tuple(g["re_range"]), tuple(g["im_range"]), g["nx"], g["ny"], g["im_spacing"]),
            max_im_phi=d["max_im_phi"],
            tolerance=d["tolerance"],
            passed=d["pass"],
            violations=d["violations"],
            inversion_failures=d["inversion_failures"],
            series_terms_max=d["series_terms_max"],
            runtime_ms=d["runtime_ms"],
        )


def _phi_rows(args):
    z, q, policy, ctrl = args
    out = voiculescu_phi_batch(z, q, policy, ctrl)
    return out.phi, out.status, out.terms


def certify_fid(q, grid: GridSpec | None = None, tolerance: float = DEFAULT_TOLERANCE,
                policy: InversionPolicy | None = None, ctrl: SeriesControl | None = None,
                workers: int = 1) -> FidCertificate:
    """Evaluate ``phi`` on every grid node and record the largest ``Im phi``.

    Failures of the inversion are collected, not raised.  With ``workers > 1``
    row blocks go to a process pool; blocks are reassembled in grid order, so
    the certificate does not depend on scheduling.
    """
    start = time.perf_counter()
    q = as_q(q)
    grid = grid or GridSpec()
    policy = policy or InversionPolicy()
    ctrl = _ctrl(ctrl)
    z = grid.nodes()
    if workers > 1 and grid.ny > 1:
        blocks = np.array_split(z, min(workers * 4, grid.ny), axis=0)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_phi_rows, [(b, q, policy, ctrl) for b in blocks]))
        phi = np.concatenate([p[0] for p in parts], axis=0)
        status = np.concatenate([p[1] for p in parts], axis=0)
        terms = max(p[2] for p in parts)
    else:
        phi, status, terms = _phi_rows((z, q, policy, ctrl))

    zf, phif, sf = z.ravel(), phi.ravel(), status.ravel()
    good = sf == OK
    max_im = float(np.max(phif.imag[good])) if np.any(good) else None
    violations = [
        {"z_re": float(zz.real), "z_im": float(zz.imag), "phi_re": float(p.real), "phi_im": float(p.imag)}
        for zz, p in zip(zf[good], phif[good]) if p.imag > tolerance
    ]
    failures = [{"z_re": float(zz.real), "z_im": float(zz.imag)} for zz in zf[~good]]
    passed = max_im is not None and max_im <= tolerance and not failures
    return FidCertificate(
        q=q, grid=grid, max_im_phi=max_im, tolerance=float(tolerance), passed=bool(passed),
        violations=violations, inversion_failures=failures, series_terms_max=int(terms),
        runtime_ms=int(round(1000 * (time.perf_counter() - start))),
    )


def sweep(q_values, grid: GridSpec | None = None, tolerance: float = DEFAULT_TOLERANCE,
          policy: InversionPolicy | None = None, ctrl: SeriesControl | None = None,
          workers: int = 1) -> list[FidCertificate]:
    """One independent certificate per ``q``."""
    return [certify_fid(q, grid, tolerance, policy, ctrl, workers) for q in q_values]


def parse_sweep(spec: str) -> list[float]:
    """``"a:b:step"`` -> ``[a, a+step, ..., b]`` (inclusive, rounded to 12 digits)."""
    try:
        a, b, step = (float(v) for v in spec.split(":"))
    except ValueError as exc:
        raise DomainError(f"sweep must look like a:b:step, got {spec!r}") from exc
    if step <= 0 or b < a:
        raise DomainError("sweep needs step > 0 and b >= a")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(n)]


def parse_grid(spec: str, im_spacing: str = "logarithmic") -> GridSpec:
    """``"re_min:re_max:im_min:im_max:nx:ny"`` -> :class:`GridSpec`."""
    parts = spec.split(":")
    if len(parts) != 6:
        raise DomainError(f"grid must look like re_min:re_max:im_min:im_max:nx:ny, got {spec!r}")
    try:
        re_min, re_max, im_min, im_max = (float(v) for v in parts[:4])
        nx, ny = int(parts[4]), int(parts[5])
    except ValueError as exc:
        raise DomainError(f"bad grid {spec!r}") from exc
    return GridSpec((re_min, re_max), (im_min, im_max), nx, ny, im_spacing)
