import math

import mpmath
import numpy as np
import pytest

from csk import symbols as sy
from csk.errors import DomainError
from csk.symbols import ProblemParams


def test_params_validation():
    with pytest.raises(DomainError, match="gamma"):
        ProblemParams(3, 1.2)
    with pytest.raises(DomainError, match="N"):
        ProblemParams(1, 0.3)
    with pytest.raises(DomainError):
        ProblemParams(3, 0.5, 0.9)
    with pytest.raises(DomainError, match="outside"):
        ProblemParams(3, 0.5, 2.5).require_p()
    assert ProblemParams(3, 0.5, 2.0).require_p() == 2.0


def test_theta_independent_gamma_quotient():
    """Theta_m against a direct high-precision Gamma quotient."""
    P = ProblemParams(4, 0.3)
    for m in (0, 1, 3):
        hp = sy.half_params(P, m)
        for z in (0.0, 1.7, 6.0 + 0.5j):
            h = 0.5j * z
            ref = 2 ** 0.6 * mpmath.gamma(hp.A_m + h) * mpmath.gamma(hp.A_m - h) / (
                mpmath.gamma(hp.B_m + h) * mpmath.gamma(hp.B_m - h))
            assert abs(sy.theta(P, m, z) - complex(ref)) < 1e-12 * abs(complex(ref))


def test_conjugate_symbol_dual_route():
    P = ProblemParams(3, 0.5, 1.8)
    xi = np.linspace(-20, 20, 41)
    assert np.allclose(sy.theta_tilde(P, 0, xi), sy.theta_tilde_direct(P, 0, xi), rtol=1e-12)


def test_hardy_closed_case():
    assert sy.hardy_constant(3, 0.5) == pytest.approx(2 / math.pi, rel=1e-14)


def test_monotonicity_properties():
    P = ProblemParams(3, 0.4)
    xi = np.linspace(0.01, 30, 500)
    th = np.real(sy.theta(P, 0, xi))
    assert np.all(np.diff(th) > 0)
    B = sy.half_params(P, 0).B_m
    s = np.linspace(0.01, 2 * B - 0.01, 200)
    assert np.all(np.diff(np.real(sy.theta(P, 0, 1j * s))) < 0)
    th0 = [float(np.real(sy.theta(P, m, 0.0))) for m in range(6)]
    assert np.all(np.diff(th0) > 0)


def test_theta_prime_matches_finite_difference():
    P = ProblemParams(5, 0.7)
    z, h = 1.3 + 0.2j, 1e-6
    fd = (sy.theta(P, 2, z + h) - sy.theta(P, 2, z - h)) / (2 * h)
    assert abs(sy.theta_prime(P, 2, z) - fd) < 1e-7 * abs(fd)


def test_p_one_is_root_and_unique():
    N, g = 3, 0.5
    p1 = sy.p_one(N, g)
    assert p1 == pytest.approx(1.6052578083752471, abs=1e-10)
    lo, hi = sy.p_range(N, g)
    ps = np.linspace(lo, hi, 1002)[1:-1]
    vals = [p * sy.A_constant(ProblemParams(N, g, p)) - sy.hardy_constant(N, g) for p in ps]
    assert np.sum(np.diff(np.sign(vals)) != 0) == 1


def test_constants_relations():
    P = ProblemParams(3, 0.5, 2.0)
    assert sy.q0(P) == pytest.approx(0.0, abs=1e-14)
    assert sy.A_constant(P) == pytest.approx(sy.hardy_constant(3, 0.5), rel=1e-13)
    assert sy.d_tilde_gamma(0.5) == pytest.approx(-sy.d_gamma(0.5), rel=1e-14)


def test_degree_indexing():
    assert [sy.harmonic_dimension(l, 3) for l in range(4)] == [1, 3, 5, 7]
    assert [sy.degree_from_multiplicity_index(m, 3) for m in range(5)] == [0, 1, 1, 1, 2]
