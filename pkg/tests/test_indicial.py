import math

import numpy as np
import pytest

from csk import indicial as ind
from csk import symbols as sy
from csk.acceptance import locate_zero
from csk.errors import DegeneratePole, DomainError
from csk.symbols import ProblemParams


def test_kappa_zero_ladder_located_by_argument_principle():
    P = ProblemParams(3, 0.3)
    for m in (0, 2):
        B = sy.half_params(P, m).B_m
        for j in range(4):
            count, z = locate_zero(P, m, 1j * (2 * (B + j) + 0.02), 0.25)
            assert abs(count - 1) < 1e-10
            assert abs(z - 2j * (B + j)) < 1e-10


def test_poles_solve_equation_and_are_certified():
    P = ProblemParams(4, 0.6)
    kappa = 0.5 * sy.hardy_constant(4, 0.6)
    tab = ind.find_poles(P, 1, kappa, 8)
    for e in tab.entries:
        assert abs(sy.theta(P, 1, e.z) - kappa) < 1e-9
    assert tab.certified_window is not None
    assert tab.regime == ind.Regime.STABLE


def test_unstable_regime_has_real_pole():
    P = ProblemParams(3, 0.5)
    kappa = 1.5 * sy.hardy_constant(3, 0.5)
    tab = ind.find_poles(P, 0, kappa, 3)
    assert tab.regime == ind.Regime.UNSTABLE
    assert tab.entries[0].axis == ind.Axis.REAL
    assert abs(sy.theta(P, 0, tab.entries[0].tau) - kappa) < 1e-10


def test_degenerate_and_invalid():
    P = ProblemParams(3, 0.5)
    with pytest.raises(DegeneratePole):
        ind.find_poles(P, 0, float(np.real(sy.theta(P, 0, 0.0))), 2)
    with pytest.raises(DomainError):
        ind.find_poles(P, 0, -1.0, 2)


def test_pole_table_json_round_trip():
    tab = ind.find_poles(ProblemParams(3, 0.5), 0, 0.2, 5)
    back = ind.PoleTable.from_json(tab.to_json())
    assert np.allclose(back.sigmas(), tab.sigmas())
    assert back.regime == tab.regime


@pytest.mark.parametrize("tr", [(3, 0.5, 1.55), (3, 0.5, 1.9), (4, 0.75, 2.0), (5, 0.25, 1.2)])
def test_mode_one_root(tr):
    P = ProblemParams(*tr)
    rep = ind.indicial_roots(P, 1, ind.Location.ORIGIN)
    assert abs(rep.gamma_minus - (-2 * tr[1] / (tr[2] - 1) - 1)) < 1e-8
    # roots are symmetric about -(N - 2 gamma)/2
    centre = -(tr[0] - 2 * tr[1]) / 2
    assert abs((rep.gamma_minus + rep.gamma_plus) / 2 - centre) < 1e-12


def test_roots_at_infinity_closed_form():
    P = ProblemParams(3, 0.5, 1.8)
    rep = ind.indicial_roots(P, 0, ind.Location.INFINITY)
    assert rep.gamma_minus.real == pytest.approx(-(3 - 1) / 2 - (1 - 0.5 + 0.5))
    assert rep.gamma_plus.real == pytest.approx(0.0, abs=1e-14)


def test_stability_scan():
    N, g = 4, 0.75
    lo, hi = sy.p_range(N, g)
    p1 = sy.p_one(N, g)
    for p in np.linspace(lo, hi, 11)[1:]:
        rep = ind.indicial_roots(ProblemParams(N, g, float(p)), 0, ind.Location.ORIGIN)
        assert (abs(rep.gamma_plus.imag) > 0) == (p > p1)
