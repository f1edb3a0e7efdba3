import math
import warnings

import numpy as np
import pytest

from csk import kernels
from csk import symbols as sy
from csk.acceptance import kernel_exponents
from csk.errors import GridTooCoarse, SingularityError, TailUndeclared
from csk.grid import GridFunction
from csk.symbols import ProblemParams

S = np.array([0.3, 1.0, 3.0])


@pytest.fixture(autouse=True)
def _quiet_quad():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


@pytest.mark.parametrize("N,g", [(3, 0.5), (4, 0.75), (5, 0.25)])
def test_closed_form_against_angular_integral(N, g):
    P = ProblemParams(N, g)
    ref = kernels.km_funk_hecke(P, 0, S)
    assert np.max(np.abs(kernels.k0_even(N, g, S) / ref - 1)) < 1e-8


def test_fourier_route_mode_zero_against_angular_integral():
    P = ProblemParams(3, 0.5)
    ref = kernels.km_funk_hecke(P, 0, S)
    assert np.max(np.abs(kernels.km_fourier(P, 0, S) / ref - 1)) < 1e-7


@pytest.mark.parametrize("m", [1, 2])
def test_higher_modes_against_angular_integral(m):
    P = ProblemParams(3, 0.5)
    ref = kernels.km_funk_hecke(P, m, S)
    assert np.max(np.abs(kernels.km_fourier(P, m, S) / ref - 1)) < 1e-6


def test_mode_one_in_four_dimensions():
    P = ProblemParams(4, 0.75)
    ref = kernels.km_funk_hecke(P, 1, S)
    assert np.max(np.abs(kernels.km_fourier(P, 1, S) / ref - 1)) < 1e-5


@pytest.mark.parametrize("tr", [(3, 0.5, 1.8), (4, 0.75, 1.8)])
def test_kernel_exponents(tr):
    N, g, p = tr
    small, minus, plus = kernel_exponents(ProblemParams(*tr))
    assert small == pytest.approx(-(1 + 2 * g), rel=0.03)
    assert minus == pytest.approx(-(N - 2 * g / (p - 1)), rel=0.03)
    assert plus == pytest.approx(-2 * p * g / (p - 1), rel=0.03)


def test_constants_map_to_A():
    P = ProblemParams(3, 0.5, 1.8)
    one = GridFunction(-10, 10, np.ones(801), 0.0, 0.0)
    out = kernels.apply_op(P, 0, one).values
    assert abs(out[400] - sy.A_constant(P)) < 1e-9


def test_kernel_is_singular_at_origin():
    with pytest.raises(SingularityError):
        kernels.kernel_k0(ProblemParams(3, 0.5, 1.8), 0.0)


def _gauss(c=0.0, a=1.0):
    return GridFunction.from_function(lambda t: np.exp(-a * (t - c) ** 2), -10, 10, 801)


def test_linearity():
    P = ProblemParams(3, 0.5, 1.8)
    v, w = _gauss(), _gauss(0.5, 2.0)
    lhs = kernels.apply_op(P, 0, v.with_values(2 * v.values - 3 * w.values)).values
    rhs = 2 * kernels.apply_op(P, 0, v).values - 3 * kernels.apply_op(P, 0, w).values
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_translation_equivariance():
    P = ProblemParams(3, 0.5, 1.8)
    Av = kernels.apply_op(P, 0, _gauss()).values
    Au = kernels.apply_op(P, 0, _gauss(1.0)).values
    shift = 40  # one unit at h = 0.025
    assert np.max(np.abs(Au[shift:] - Av[:-shift])) < 1e-11


def test_coarse_grid_rejected():
    v = GridFunction.from_function(lambda t: np.exp(-t * t), -10, 10, 101)
    with pytest.raises(GridTooCoarse):
        kernels.apply_op(ProblemParams(3, 0.5, 1.8), 0, v)


def test_undeclared_tail_rejected():
    v = GridFunction.from_function(lambda t: 1.0 / (1.0 + np.exp(-t)), -10, 10, 801)
    with pytest.raises(TailUndeclared):
        kernels.apply_op(ProblemParams(3, 0.5, 1.8), 0, v)


def test_cache_lookup_and_reuse(tmp_path, monkeypatch):
    monkeypatch.setenv("CSK_CACHE_DIR", str(tmp_path))
    spec = kernels.KernelSpec.for_mode(ProblemParams(3, 0.5), 0).build_cache()
    s = np.array([0.01, 0.2, 1.7, 9.0])
    assert np.max(np.abs(spec.lookup(s) / spec.even(s) - 1)) < 1e-6
    files = list(tmp_path.glob("kernel_*.txt"))
    assert len(files) == 1
    again = kernels.KernelSpec.for_mode(ProblemParams(3, 0.5), 0).build_cache()
    assert np.array_equal(again.cache_v, spec.cache_v)


def test_calibrated_universal_factor():
    assert kernels.calibrate_universal(ProblemParams(4, 0.3, 1.3)) == pytest.approx(1 / math.pi, rel=1e-6)
