import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfid.density import cauchy_kernel, integrate_density
from qfid.errors import BranchEscape, DomainError, NoConvergence
from qfid.qseries import g_q
from qfid.transforms import (BRANCH_ESCAPE, CONTINUED, NO_CONVERGENCE, OK, UPPER, InversionPolicy,
                             f_transform, f_transform_inverse, invert_g, invert_g_batch,
                             q_gaussian_cauchy, semicircle_cauchy, semicircle_cauchy_inverse,
                             voiculescu_phi, voiculescu_phi_batch)

from conftest import Q_GRID
from oracles import phi_series

GOLDEN = (1 - math.sqrt(5)) / 2


def upper_points(rng, n, re=5.0, im_lo=1e-3, im_hi=5.0):
    return rng.uniform(-re, re, n) + 1j * np.exp(rng.uniform(math.log(im_lo), math.log(im_hi), n))


# --- semicircle ------------------------------------------------------------

def test_semicircle_examples():
    assert semicircle_cauchy(2.0) == pytest.approx(1.0)
    assert semicircle_cauchy(1j) == pytest.approx(1j * GOLDEN, abs=1e-15)
    assert semicircle_cauchy(1e-12j) == pytest.approx(-1j, abs=1e-11)
    assert semicircle_cauchy(0.0) == pytest.approx(-1j, abs=1e-15)


def test_semicircle_inverse_examples(rng):
    assert semicircle_cauchy_inverse(-1j) == 0
    assert semicircle_cauchy_inverse(1j * GOLDEN) == pytest.approx(1j, abs=1e-12)
    with pytest.raises(DomainError):
        semicircle_cauchy_inverse(0.0)
    z = upper_points(rng, 100)
    assert np.max(np.abs(semicircle_cauchy_inverse(semicircle_cauchy(z)) - z)) <= 1e-12


def test_semicircle_matches_quadrature():
    z = -0.7 + 0.4j
    assert abs(semicircle_cauchy(z) - integrate_density(0.0, cauchy_kernel(z))) <= 1e-10


def test_continued_branch_domain():
    with pytest.raises(DomainError):
        semicircle_cauchy(0.5 + 0.1j, CONTINUED)


def _continue_root(path, start):
    # follow the root of G^2 - z G + 1 = 0 that moves continuously along ``path``
    out, g = [], start
    for z in path:
        disc = np.sqrt(z * z - 4 + 0j)
        roots = ((z + disc) / 2, (z - disc) / 2)
        g = min(roots, key=lambda r: abs(r - g))
        out.append(g)
    return np.array(out)


@pytest.mark.parametrize("x0", [0.0, -1.3, 1.7])
def test_branch_consistency_across_the_cut(x0):
    y = np.linspace(1.0, -1.0, 20_001)
    path = x0 + 1j * y
    tracked = _continue_root(path, semicircle_cauchy(path[0], UPPER))
    upper = y > 0
    assert np.max(np.abs(tracked[upper] - semicircle_cauchy(path[upper], UPPER))) <= 1e-12
    assert np.max(np.abs(tracked[~upper] - semicircle_cauchy(path[~upper], CONTINUED))) <= 1e-12


def test_both_sheets_solve_the_quadratic():
    z = np.array([0.3 - 0.2j, -1.5 - 1e-3j, 4 - 3j])
    for branch in (UPPER, CONTINUED):
        G = semicircle_cauchy(z, branch)
        assert np.max(np.abs(G * G - z * G + 1)) <= 1e-13
    assert np.all(np.abs(semicircle_cauchy(z, CONTINUED)) > 1)
    assert abs(semicircle_cauchy(0.0, CONTINUED) - semicircle_cauchy(0.0, UPPER)) <= 1e-15


@given(x=st.floats(-1.9, 1.9))
def test_continued_branch_is_continuous_through_the_cut(x):
    above = semicircle_cauchy(complex(x, 1e-13), UPPER)
    below = semicircle_cauchy(complex(x, -1e-13), CONTINUED)
    assert abs(above - below) <= 1e-12


# --- composed transforms ---------------------------------------------------

def test_q_gaussian_cauchy_examples(rng):
    z = upper_points(rng, 20)
    np.testing.assert_allclose(q_gaussian_cauchy(z, 0.0), semicircle_cauchy(z), atol=0)
    y = 1e6
    assert abs(1j * y * q_gaussian_cauchy(1j * y, 0.5) - 1) <= 1e-6


@pytest.mark.parametrize("q", [0.25, 0.5, 0.75])
def test_q_gaussian_cauchy_matches_quadrature(q, rng):
    for z in upper_points(rng, 8, re=3.0, im_lo=0.05, im_hi=3.0):
        ref = integrate_density(q, cauchy_kernel(z), quad_tol=1e-11)
        assert abs(q_gaussian_cauchy(z, q) - ref) <= 1e-8


@pytest.mark.parametrize("q", [0.0, 0.3, 0.6, 0.9])
def test_f_transform_inequality(q, rng):
    z = upper_points(rng, 10_000)
    assert np.all(f_transform(z, q).imag > z.imag)


@given(re=st.floats(-5, 5), im=st.floats(1e-3, 5), q=st.sampled_from(Q_GRID))
def test_conjugate_symmetry(re, im, q):
    z = complex(re, im)
    lower = q_gaussian_cauchy(z.conjugate(), q, UPPER)
    assert abs(lower - q_gaussian_cauchy(z, q).conjugate()) <= 1e-14 * max(1, abs(lower))


# --- inversion -------------------------------------------------------------

def test_invert_identity_at_q0(rng):
    t = rng.normal(size=10) - 1j * rng.uniform(0.1, 3, 10)
    np.testing.assert_array_equal(invert_g(t, 0.0), t)


def test_invert_round_trip(rng):
    t = rng.uniform(-3, 3, 100) - 1j * rng.uniform(1e-3, 3, 100)
    u = invert_g(t, 0.5)
    assert np.max(np.abs(g_q(u, 0.5) - t)) <= 1e-12
    assert np.all(u.imag < 0)


def test_invert_interior_point():
    assert abs(invert_g(g_q(-0.5j, 0.5), 0.5) + 0.5j) <= 1e-10


def test_invert_domain():
    with pytest.raises(DomainError):
        invert_g(0.3 + 0.0j, 0.5)


def test_invert_failures_are_signalled():
    # forbid any step refinement and allow a single corrector step
    harsh = InversionPolicy(continuation_steps=1, min_step_fraction=0.9, newton_max_iter=1)
    t = np.array([25 - 0.01j, -40 - 0.02j, 60 - 1e-3j])
    res = invert_g_batch(t, 0.9, harsh)
    assert np.all(res.status != OK)
    assert set(res.status.tolist()) <= {NO_CONVERGENCE, BRANCH_ESCAPE}
    with pytest.raises((NoConvergence, BranchEscape)):
        invert_g(t, 0.9, harsh)


def test_invert_does_not_depend_on_step_count(rng):
    t = rng.uniform(-20, 20, 50) - 1j * np.exp(rng.uniform(-6, 2, 50))
    a = invert_g(t, 0.8, InversionPolicy(continuation_steps=32))
    b = invert_g(t, 0.8, InversionPolicy(continuation_steps=256))
    assert np.max(np.abs(a - b) / np.maximum(1, np.abs(a))) <= 1e-10


# --- Voiculescu transform --------------------------------------------------

def test_phi_examples():
    z = 0.4 + 2.3j
    assert voiculescu_phi(z, 0.0) == pytest.approx(1 / z, abs=1e-15)
    y = 1e3
    assert abs(voiculescu_phi(1j * y, 0.5) - 0.5 / (1j * y)) <= 1e-3 * 0.5 / y
    assert voiculescu_phi(0.1 + 0.01j, 0.7).imag <= 1e-9


def test_phi_domain():
    with pytest.raises(DomainError):
        voiculescu_phi(1.0 - 0.1j, 0.5)


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
def test_phi_matches_free_cumulant_series(q):
    # phi(z) = sum kappa_{n+1} z^{-n}, cumulants from the closed-form moments
    for z in (10j, 8 + 6j, -9 + 4j, 12 + 0.5j):
        assert abs(voiculescu_phi(z, q) - phi_series(z, q)) <= 1e-12


@pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
def test_f_inverse_round_trip(q, rng):
    z = upper_points(rng, 200, re=4.0, im_lo=1e-2, im_hi=4.0)
    back = f_transform_inverse(f_transform(z, q), q)
    assert np.max(np.abs(back - z)) <= 1e-10


@pytest.mark.parametrize("q", Q_GRID)
def test_phi_maps_into_lower_half_plane(q, rng):
    z = upper_points(rng, 400, re=10.0, im_lo=1e-3, im_hi=10.0)
    out = voiculescu_phi_batch(z, q)
    assert np.all(out.status == OK)
    assert np.max(out.phi.imag) <= 1e-9
