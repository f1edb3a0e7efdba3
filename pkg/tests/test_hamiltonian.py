import numpy as np
import pytest

from csk import hamiltonian as hm
from csk import kernels, odesolve
from csk import symbols as sy
from csk.acceptance import HETEROCLINIC, heteroclinic_profile
from csk.errors import GridTooCoarse, TailUndeclared
from csk.grid import GridFunction
from csk.symbols import ProblemParams

PS = ProblemParams(*HETEROCLINIC[0])
PC = ProblemParams(3, 0.5, 2.0)


def _d4(y, h):
    out = np.full_like(y, np.nan)
    out[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    return out


@pytest.fixture(scope="module")
def hetero():
    v = heteroclinic_profile()
    return v, hm.extension_field(PS, v)


@pytest.fixture(scope="module")
def bubble():
    b = odesolve.bubble_profile(PC, -8, 8, 321)
    return b, hm.extension_field(PC, b)


def test_defining_function_shape():
    D = hm.defining_function(ProblemParams(3, 0.5, 1.8))
    assert D.rho_star[-1] == pytest.approx(D.rho_star_0, rel=1e-14)
    assert np.all(np.diff(D.rho_star) > 0)
    ratio = D.rho_star[:200] / D.rho[:200]
    assert np.all((ratio > 0.9) & (ratio < 1.1))
    mid = D.rho_star[1000]
    assert D.rho_of(mid) == pytest.approx(D.rho[1000], rel=1e-6)


def test_reduced_weights_relation(hetero):
    _, F = hetero
    e, e1, e2 = F.weight_e()
    r = F.rho
    assert np.allclose(e1 * F.lam ** 2, e, rtol=1e-14)
    assert np.allclose(e2 * (1 + r ** 2 / 4) ** 2 * F.lam ** 2, e, rtol=1e-14)


def test_dirichlet_and_neumann_traces(hetero):
    v, F = hetero
    j = int(np.argmin(F.rho))
    assert np.max(np.abs(F.V[j] - v.values)) < 1e-4
    inner = v.interior(0.6)
    Pv = kernels.apply_op(PS, 0, v).values
    assert np.max(np.abs(hm.neumann_trace(PS, F, v) - Pv)[inner]) < 1e-3


def test_constant_profile_gives_constant_H():
    P = ProblemParams(3, 0.5, 1.8)
    one = GridFunction(-5, 5, np.ones(201), 0.0, 0.0)
    H = hm.hamiltonian_trace(P, hm.extension_field(P, one), one).values
    want = sy.A_constant(P) / sy.d_tilde_gamma(0.5) * (1 / 2.8 - 0.5)
    assert np.max(np.abs(H - want)) <= 1e-14 * abs(want)


def test_critical_bubble_conserves_H(bubble):
    b, F = bubble
    H = hm.hamiltonian_trace(PC, F, b).values
    assert np.ptp(H[b.interior(0.6)]) < 1e-10


def test_reduced_weights_do_not_conserve(bubble):
    b, F = bubble
    H = hm.hamiltonian_trace(PC, F, b, weights="reduced").values
    assert np.ptp(H[b.interior(0.6)]) > 1e-2


def test_subcritical_monotone_and_identity(hetero):
    v, F = hetero
    H = hm.hamiltonian_trace(PS, F, v).values
    inner = v.interior(0.6)
    dH = _d4(H, v.h)
    assert np.nanmax(dH[inner]) <= 1e-6 * np.max(np.abs(H))
    rhs = hm.hamiltonian_derivative(PS, F)
    assert np.nanmax(np.abs(dH - rhs)[inner]) < 1e-6


def test_generalized_identity_off_solutions():
    w = GridFunction.from_function(lambda t: 0.8 * np.exp(-t * t / 4), -12, 12, 481)
    F = hm.extension_field(PS, w)
    lhs = _d4(hm.hamiltonian_trace(PS, F, w).values, w.h)
    A, p = sy.A_constant(PS), PS.p
    gap = A * w.values ** p - kernels.apply_op(PS, 0, w).values
    rhs = gap * _d4(w.values, w.h) / sy.d_tilde_gamma(PS.gamma) + hm.hamiltonian_derivative(PS, F)
    inner = w.interior(0.6)
    assert np.nanmax(np.abs(lhs - rhs)[inner]) < 1e-6
    assert np.nanmax(np.abs(lhs)[inner]) > 1e-2


def test_quadrature_doubling(bubble):
    b, _ = bubble
    assert hm.quadrature_check(PC, b) < 1e-7


def test_guards():
    coarse = GridFunction.from_function(lambda t: np.exp(-t * t), -5, 5, 101)
    with pytest.raises(GridTooCoarse):
        hm.extension_field(PC, coarse)
    step = GridFunction.from_function(lambda t: 1 / (1 + np.exp(-t)), -5, 5, 201)
    with pytest.raises(TailUndeclared):
        hm.extension_field(PC, step)
