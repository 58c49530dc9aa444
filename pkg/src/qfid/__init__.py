"""Numerics for the free infinite divisibility of the q-Gaussian law."""
from .certify import FidCertificate, GridSpec, certify_fid, sweep
from .density import (integrate_density, jacobi_moments, q_gaussian_density,
                       q_gaussian_density_theta)
from .errors import (BranchEscape, DomainError, NoConvergence, NoneFound, NonConvergence,
                     OnContourZero, QFidError, QuadFailure, StallError)
from .geometry import (Contour, PathTrace, count_zeros_contour, injectivity_witness,
                       real_critical_points, trace_gamma, x_q_contour)
from .qseries import (QParam, SeriesControl, chebyshev_u, g_q, g_q_prime, q_hermite,
                      q_pochhammer, theta_big)
from .transforms import (BranchTag, InversionPolicy, invert_g, q_gaussian_cauchy,
                         semicircle_cauchy, semicircle_cauchy_inverse, voiculescu_phi)

__version__ = "0.1.0"
