import math

import numpy as np
import pytest
from scipy import integrate

from csk import greens, kernels
from csk import symbols as sy
from csk.acceptance import residue_ratio
from csk.errors import DecayMismatch, TruncationError, WindowError
from csk.grid import GridFunction
from csk.symbols import ProblemParams


@pytest.mark.parametrize("kappa_frac", [0.0, 0.5])
@pytest.mark.parametrize("m", [0, 2])
def test_residue_series_against_fourier_quadrature(m, kappa_frac):
    P = ProblemParams(4, 0.3)
    kappa = kappa_frac * sy.hardy_constant(4, 0.3)
    s = greens.green_series(P, m, kappa)
    for t in (0.5, 1.0, 2.0):
        assert abs(greens.green_eval(s, t) - greens.green_fourier_oracle(P, m, kappa, t)) < 1e-6


def test_green_is_even_in_stable_regime():
    s = greens.green_series(ProblemParams(3, 0.5), 0, 0.1)
    t = np.array([0.3, 1.1, 2.7])
    assert np.allclose(greens.green_eval(s, t), greens.green_eval(s, -t), rtol=1e-13)


def test_truncation_guard():
    s = greens.green_series(ProblemParams(3, 0.5), 0, 0.0)
    with pytest.raises(TruncationError):
        greens.green_eval(s, 0.01)


def test_json_export():
    s = greens.green_series(ProblemParams(3, 0.5), 0, 0.0)
    assert '"coeffs"' in s.to_json()


def _bump(t):
    out = np.zeros_like(t)
    inside = np.abs(t) < 5
    out[inside] = np.exp(-1 / (1 - (t[inside] / 5) ** 2))
    return out


def test_round_trip_mode_zero_and_three():
    P = ProblemParams(3, 0.5, 2.0)  # Q0 = 0, so apply_op and the residue series share one symbol
    h = GridFunction.from_function(_bump, -12, 12, 961)
    for m in (0, 3):
        w = greens.solve_mode(greens.green_series(P, m, 0.0), h)
        back = kernels.apply_op(P, m, w).values
        assert np.max(np.abs(back - h.values)) < 1e-4


def test_round_trip_through_conjugation():
    """P~ v = exp(-Q0 t) P(exp(Q0 t) v), so v = exp(-Q0 t) G * (exp(Q0 t) h)."""
    P = ProblemParams(3, 0.5, 1.8)
    q = sy.q0(P)
    h = GridFunction.from_function(_bump, -12, 12, 961)
    w = greens.solve_mode(greens.green_series(P, 0, 0.0), h.with_values(np.exp(q * h.t) * h.values))
    v = GridFunction(h.t_min, h.t_max, np.exp(-q * h.t) * w.values, w.decay_plus + q, w.decay_minus - q)
    back = kernels.apply_op(P, 0, v).values
    assert np.max(np.abs(back - h.values)) < 1e-4


def test_solve_mode_hypotheses():
    P = ProblemParams(3, 0.5)
    s = greens.green_series(P, 0, 0.0)
    h = GridFunction(-5, 5, np.ones(101), 0.0, 0.0)
    with pytest.raises(DecayMismatch):
        greens.solve_mode(s, h)
    with pytest.raises(WindowError):
        greens.green_shifted(P, 0, 0.0, 10_000)


def test_residue_law_with_derived_constant():
    """|res_j| j^(2g) pi / (sin(pi g) e^(2g)) tends to 2^(1-2g) e^(-2g), not to 1."""
    for N, g, tol in ((3, 0.5, 3e-3), (4, 0.75, 5e-3)):
        r = residue_ratio(N, g, 200)
        assert abs(r / (2 ** (1 - 2 * g) * math.exp(-2 * g)) - 1) < tol
    a = abs(residue_ratio(3, 0.25, 200) / (2 ** 0.5 * math.exp(-0.5)) - 1)
    b = abs(residue_ratio(3, 0.25, 800) / (2 ** 0.5 * math.exp(-0.5)) - 1)
    assert b < a < 0.03


def test_shifted_solve_multipole_limit():
    """Window J = 0: w e^(sigma0 t) -> -(d0 / 2 pi) int e^(sigma0 t') h(t') dt' as t -> -inf."""
    P = ProblemParams(3, 0.5, 2.0)
    h = GridFunction.from_function(lambda t: _bump(2 * t), -12, 12, 961)
    s = greens.green_shifted(P, 0, 0.0, 0)
    w = greens.solve_mode(s, h)
    s0, d0 = float(s.sigma[0]), float(s.d[0])
    moment = integrate.trapezoid(np.exp(s0 * h.t) * h.values, h.t)
    assert w.decay_minus == -s0
    assert abs(w.values[0] * math.exp(s0 * h.t[0]) + d0 * moment / (2 * math.pi)) < 1e-8
