import numpy as np
import pytest

from csk import odesolve
from csk.acceptance import heteroclinic_profile
from csk.errors import DomainError, NewtonDivergence, NonPositiveIterate, NoConvergence
from csk.grid import GridFunction
from csk.symbols import ProblemParams

P = ProblemParams(3, 0.5, 1.8)


def _near_one(amp, n=241):
    t = np.linspace(-6, 6, n)
    return GridFunction(-6, 6, 1 + amp * np.exp(-t * t), 0.0, 0.0)


def test_constant_solution_needs_no_step():
    r = odesolve.newton_profile(P, _near_one(0.0))
    assert r.iterations == 0 and r.residual_norm < 1e-10


def test_perturbed_start_returns_to_one_below_p1():
    Ps = ProblemParams(3, 0.5, 1.55)  # p1 ~ 1.605 at (3, 0.5)
    r = odesolve.newton_profile(Ps, _near_one(0.1))
    h = r.history
    assert r.converged and h[-1] < 1e-8
    assert h[-1] <= 10 * h[-2] ** 2
    assert np.max(np.abs(r.grid.values - 1)) < 1e-8
    fine = odesolve.refine(r.grid)
    res = odesolve.profile_residual(Ps, fine).values
    assert np.max(np.abs(res[fine.interior(0.8)])) < 4e-8


def test_bubble_solves_critical_equation():
    Pc = ProblemParams(3, 0.5, 2.0)
    b = odesolve.bubble_profile(Pc, -10, 10, 801)
    assert np.max(np.abs(odesolve.profile_residual(Pc, b).values)) < 1e-5


def test_heteroclinic_connects_zero_to_one():
    v = heteroclinic_profile()
    assert np.all(np.diff(v.values) > 0)
    assert v.values[0] < 1e-3 and abs(v.values[-1] - 1) < 1e-3
    res = odesolve.profile_residual(ProblemParams(8, 0.5, 1.1911), v)
    assert np.max(np.abs(res.values[v.interior(0.8)])) < 1e-8


def test_refine_halves_spacing():
    v = _near_one(0.1, 121)
    f = odesolve.refine(v)
    assert f.n == 241 and f.h == pytest.approx(v.h / 2)
    assert np.allclose(f.values[::2], v.values, atol=1e-14)


def test_newton_guards():
    with pytest.raises(DomainError):
        odesolve.newton_profile(P, _near_one(0.0), tol=1e-10)
    with pytest.raises(DomainError):
        odesolve.newton_profile(P, _near_one(0.0, 401))
    bad = _near_one(0.0)
    with pytest.raises(NonPositiveIterate):
        odesolve.newton_profile(P, bad.with_values(bad.values - 2))
    with pytest.raises(NewtonDivergence):
        odesolve.newton_profile(P, _near_one(0.2), max_iter=3)


def test_torsion_matches_closed_form():
    r, w = odesolve.torsion_solution(P, 32, 16)
    assert np.max(np.abs(w - odesolve.torsion_closed_form(3, 0.5, r))) < 1e-8


def test_picard_is_monotone():
    sols = [odesolve.picard_ball(P, lam) for lam in (0.05, 0.1, 0.2)]
    for s in sols:
        assert all(np.all(a <= b + 1e-14) for a, b in zip(s.history, s.history[1:]))
        assert np.all(np.diff(s.w) <= 1e-12)
        assert s.defect < 1e-8
    assert all(np.all(a.w <= b.w) for a, b in zip(sols, sols[1:]))


def test_bound_constant_stable_under_refinement():
    coarse = odesolve.uniform_bound_check(odesolve.picard_ball(P, 0.2))
    fine = odesolve.uniform_bound_check(odesolve.picard_ball(P, 0.2, n_r=96))
    assert coarse.holds and fine.holds
    assert abs(fine.C0 - coarse.C0) <= 0.2 * coarse.C0


def test_picard_guards():
    with pytest.raises(DomainError):
        odesolve.picard_ball(P, 0.0)
    with pytest.raises(NoConvergence):
        odesolve.picard_ball(P, 5.0)


def test_kelvin_is_an_involution():
    r = np.linspace(0.05, 0.95, 19)
    w = np.exp(-r)
    s, u = odesolve.kelvin_transform(r, w, 3, 0.5)
    r2, w2 = odesolve.kelvin_transform(s, u, 3, 0.5)
    assert np.allclose(r2, r, rtol=1e-14) and np.allclose(w2, w, rtol=1e-14)


def test_kelvin_maps_powers():
    r = np.linspace(0.1, 0.9, 9)
    s, u = odesolve.kelvin_transform(r, r ** 0.7, 3, 0.5)
    assert np.allclose(u, s ** (-(3 - 1.0) - 0.7), rtol=1e-13)
    with pytest.raises(DomainError):
        odesolve.kelvin_transform(np.array([0.0, 0.5]), np.ones(2), 3, 0.5)
