import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfid.errors import DomainError, NonConvergence
from qfid.qseries import (QParam, SeriesControl, calibrate_theta, chebyshev_u, g_q,
                          g_q_and_prime, g_q_prime, q_hermite, q_pochhammer, theta_big)

from conftest import Q_GRID
from oracles import g_mp, g_prime_mp

qs = st.sampled_from(Q_GRID)
finite = dict(allow_nan=False, allow_infinity=False)


def disc_points(rng, n, radius):
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, n))


# --- QParam / SeriesControl ------------------------------------------------

@pytest.mark.parametrize("bad", [-0.1, 1.0, 1.5, float("nan")])
def test_qparam_rejects_out_of_range(bad):
    with pytest.raises(DomainError, match="0.999"):
        QParam(bad)


def test_series_control_defaults():
    c = SeriesControl()
    assert (c.abs_tol, c.max_terms) == (1e-14, 512)


# --- Chebyshev / q-Hermite -------------------------------------------------

@pytest.mark.parametrize("k,x,expected", [(0, 0.3, 1.0), (1, 0.5, 1.0), (2, 0.5, 0.0)])
def test_chebyshev_examples(k, x, expected):
    assert chebyshev_u(k, x) == pytest.approx(expected, abs=1e-15)


@given(k=st.integers(0, 40), theta=st.floats(0.05, math.pi - 0.05))
def test_chebyshev_trigonometric_identity(k, theta):
    expected = math.sin((k + 1) * theta) / math.sin(theta)
    assert chebyshev_u(k, math.cos(theta)) == pytest.approx(expected, abs=1e-10 * (k + 1) ** 2)


def test_chebyshev_accepts_complex_and_arrays():
    z = 0.3 + 0.4j
    assert chebyshev_u(2, z) == pytest.approx(4 * z * z - 1)
    xs = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(chebyshev_u(3, xs), 8 * xs**3 - 4 * xs)


@pytest.mark.parametrize("n,x,q,expected", [
    (1, 2.0, 0.0, 2.0), (1, 2.0, 0.7, 2.0), (2, 2.0, 0.5, 3.0), (3, 1.0, 0.5, -1.5)])
def test_q_hermite_examples(n, x, q, expected):
    assert q_hermite(n, x, q) == pytest.approx(expected, abs=1e-14)


@given(x=st.floats(-3, 3), q=st.floats(0, 0.99))
def test_q_hermite_closed_form_h4(x, q):
    # H_4 from the recurrence by hand: x^4 - (3 + 2q + q^2) x^2 + (1 + q + q^2)
    expected = x**4 - (3 + 2 * q + q * q) * x**2 + (1 + q + q * q)
    assert q_hermite(4, x, q) == pytest.approx(expected, abs=1e-12)


# --- q-Pochhammer ----------------------------------------------------------

def test_pochhammer_examples():
    assert q_pochhammer(0.3 + 0.1j, 0.4, 0) == 1
    assert q_pochhammer(0.5, 0.5, 2) == pytest.approx(0.375, abs=1e-15)
    assert q_pochhammer(1.0, 0.5, math.inf) == 0


def test_pochhammer_euler_pentagonal():
    # (q;q)_inf = sum_k (-1)^k q^{k(3k-1)/2} over all integers k
    for q in (0.1, 0.5, 0.9):
        pent = sum((-1) ** k * q ** (k * (3 * k - 1) / 2) for k in range(-60, 61))
        assert q_pochhammer(q, q) == pytest.approx(pent, rel=1e-12)


# --- g_q -------------------------------------------------------------------

def test_g_examples():
    assert g_q(0, 0.7) == 0
    assert g_q(0.3 - 0.8j, 0.0) == 0.3 - 0.8j
    partial = sum(0.5 ** (k * (k + 1) / 2) for k in range(60))
    assert g_q(1j, 0.5) == pytest.approx(1j * partial, abs=1e-15)
    assert abs(g_q(1j, 0.5) - 1.6416325606551538j) < 1e-14


@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_g_matches_high_precision(q, rng):
    for w in disc_points(rng, 40, 3.0):
        exact = g_mp(complex(w), q)
        assert abs(g_q(w, q) - exact) <= 1e-13 * max(1.0, abs(exact)) + 1e-14 * abs(g_q(1j * abs(w), q))


@pytest.mark.parametrize("q", [0.3, 0.9])
def test_g_large_argument_beats_direct_series(q):
    # the direct series cancels badly at |w| = 3; the product route does not
    w = 2.1 + 2.1j
    exact = g_mp(w, q, dps=60)
    fast = g_q(w, q)
    assert abs(fast - exact) <= 1e-12 * abs(exact)


def test_g_prime_examples():
    assert g_q_prime(0, 0.4) == 1
    assert g_q_prime(1.7 - 0.2j, 0.0) == 1
    w, h = 0.3 + 0.2j, 1e-6
    fd = (g_q(w + h, 0.5) - g_q(w - h, 0.5)) / (2 * h)
    assert abs(g_q_prime(w, 0.5) - fd) <= 1e-8


@pytest.mark.parametrize("w", [0.4 - 1.1j, 2.0 - 2.5j, 1.05])
def test_g_prime_matches_high_precision(w):
    exact = g_prime_mp(w, 0.5)
    assert abs(g_q_prime(w, 0.5) - exact) <= 1e-11 * max(1.0, abs(exact))


def test_g_and_prime_vectorised():
    w = np.array([[0.1, 1.5 - 1j], [-2 + 0.3j, 0.7j]])
    g, gp = g_q_and_prime(w, 0.6)
    assert g.shape == gp.shape == w.shape
    assert g[0, 1] == pytest.approx(g_q(w[0, 1], 0.6))


def test_g_nonconvergence_when_budget_is_tiny():
    with pytest.raises(NonConvergence):
        g_q(0.9 + 0.2j, 0.99, SeriesControl(max_terms=3))


@pytest.mark.parametrize("q", Q_GRID)
def test_symmetries_on_random_points(q, rng):
    w = disc_points(rng, 10_000, 3.0)
    g = g_q(w, q)
    assert np.max(np.abs(g_q(-np.conj(w), q) + np.conj(g))) <= 1e-12
    assert np.max(np.abs(g_q(np.conj(w), q) - np.conj(g))) <= 1e-12


@given(q=qs)
def test_imaginary_axis(q):
    c = np.linspace(-5, 5, 2001)
    vals = g_q(1j * c, q)
    assert np.max(np.abs(vals.real)) <= 1e-14 * max(1.0, np.max(np.abs(vals)))
    assert np.all(np.diff(vals.imag) > 0)


def test_limit_q_to_one():
    w = 0.3 + 0.1j
    limit = w / (w * w + 1)
    gaps = [abs(g_q(w, q) - limit) for q in (0.9, 0.99, 0.999)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[-1] < 1e-2


@given(re=st.floats(-2.5, 2.5), im=st.floats(-2.5, 2.5), q=qs)
def test_g_is_odd(re, im, q):
    w = complex(re, im)
    assert abs(g_q(-w, q) + g_q(w, q)) <= 1e-12 * max(1.0, abs(g_q(w, q)))


# --- Theta -----------------------------------------------------------------

def test_theta_examples():
    assert theta_big(1.0, 0.5, "series") == 0
    assert abs(theta_big(2.0, 0.5, "series")) <= 1e-10
    w = 0.5 + 0.5j
    assert abs(theta_big(w, 0.5, "series") - theta_big(w, 0.5, "product")) <= 1e-10


def test_theta_domain():
    with pytest.raises(DomainError):
        theta_big(0.0, 0.5)
    with pytest.raises(DomainError):
        theta_big(0.5, 0.0)
    with pytest.raises(ValueError):
        theta_big(0.5, 0.5, form="continued-fraction")


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
def test_calibration_constant_has_closed_form(q):
    # triple product: the constant is q^{-3/4} (q^2; q^2)_inf
    expected = q ** -0.75 * q_pochhammer(q * q, q * q)
    cal = calibrate_theta(q)
    assert abs(cal.constant_G - expected) <= 1e-12 * abs(expected)


@given(r=st.floats(0.4, 2.5), angle=st.floats(-math.pi, math.pi), q=st.sampled_from([0.3, 0.5, 0.7]))
def test_theta_reflection(r, angle, q):
    w = r * complex(math.cos(angle), math.sin(angle))
    a, b = theta_big(1 / w, q), theta_big(w, q)
    assert abs(a + b) <= 1e-12 * max(1.0, abs(b))


def _winding(f, radius, n=4096):
    w = radius * np.exp(2j * np.pi * np.arange(n + 1) / n)
    v = f(w)
    return np.sum(np.angle(v[1:] / v[:-1])) / (2 * np.pi)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.7])
def test_theta_zeros_in_annulus_are_real(q, rng):
    f = lambda w: theta_big(w, q, "product")
    # zeros strictly inside sqrt(q) < |w| < 1/sqrt(q): exactly +1 and -1
    inner, outer = _winding(f, math.sqrt(q)), _winding(f, 1 / math.sqrt(q))
    assert round(outer - inner) == 2
    # Newton from random starts; every root found in the closed annulus is real
    found = []
    for w in disc_points(rng, 60, 1 / q):
        if abs(w) < q:
            continue
        for _ in range(60):
            h = 1e-7 * max(1.0, abs(w))
            d = (f(w + h) - f(w - h)) / (2 * h)
            step = f(w) / d
            w = w - step
            if abs(step) < 1e-14 * abs(w) or not np.isfinite(w):
                break
        if np.isfinite(w) and q - 1e-9 <= abs(w) <= 1 / q + 1e-9 and abs(f(w)) < 1e-9:
            found.append(complex(w))
    assert found
    assert max(abs(z.imag) for z in found) <= 1e-9


@pytest.mark.parametrize("q", [0.3, 0.5, 0.7])
def test_theta_at_zeros_is_accurate_to_the_rounding_floor(q):
    # near a zero, |Theta(fl(w))| can only be resolved to eps |w Theta'(w)|
    from qfid.cli import theta_rounding_floor
    from oracles import theta_mp

    for n in range(1, 6):
        for w in (q ** (n - 1), -q ** (n - 1), q ** (-n), -q ** (-n)):
            exact = theta_mp(w, q)
            floor = theta_rounding_floor(w, q)
            for form in ("product", "series"):
                assert abs(theta_big(w, q, form) - exact) <= 4 * floor + 1e-14
