"""Convolution kernels of the conjugated operator and its action on grid functions.

The mode-m operator acts as

    P~ v(t) = int K~_m(s) [v(t) - v(t - s)] ds + C_m v(t),

with K~_m(s) = exp(-Q0 s) K_m(|s|), K_m the (positive for m = 0) kernel of
the unconjugated mode operator, and

    C_m = Theta_m(0) + PV int K_m(s) (1 - exp(-Q0 s)) ds,

so that the kernel alone decides what the operator returns on constants.
"""
from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from . import specialfn as sf
from . import symbols as sy
from .errors import (GridTooCoarse, ParameterDegeneracy, QuadratureFailure,
                     SingularityError, TailUndeclared)
from .grid import GridFunction
from .greens import _bspline, _bspline_coeffs
from .symbols import ProblemParams

UNIVERSAL = 1.0 / math.pi
FOURIER_CUTOFF = 500.0
CACHE_VERSION = "1"
_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)


class KernelForm(str, Enum):
    CLOSED_FORM_0 = "ClosedForm0"
    FOURIER_NUMERIC = "FourierNumeric"


def q0_or_zero(params: ProblemParams) -> float:
    return 0.0 if params.p is None else sy.q0(params)


def kernel_constant(N, gamma, universal: float = UNIVERSAL) -> float:
    """Prefactor c of the mode-0 closed form (universal = 1/pi from small-s matching)."""
    g = gamma
    return (universal * 2 ** (1 + 2 * g) * math.sin(math.pi * g)
            * math.gamma((N + 2 * g) / 2) * math.gamma(1 + g) / math.gamma(N / 2))


def _k0_raw(N, g, s, universal):
    a, b, c = (N + 2 * g) / 2, 1 + g, N / 2
    F = np.empty(s.shape)
    near = s < 0.5 * math.log(2.0)
    if np.any(near):
        F[near] = np.real(sf.hyp2f1_near_one(a, b, c, -np.expm1(-2 * s[near])))
    if np.any(~near):
        F[~near] = np.real(sf.hyp2f1(a, b, c, np.exp(-2 * s[~near])))
    return kernel_constant(N, g, universal) * np.exp(-(N + 2 * g) * s / 2) * F


def k0_even(N, gamma, s, universal: float = UNIVERSAL):
    """Unconjugated mode-0 kernel K_0(s) for s > 0 (vectorised)."""
    s = np.asarray(s, dtype=float)
    try:
        return _k0_raw(N, gamma, s, universal)
    except ParameterDegeneracy:
        # logarithmic 2F1 case (gamma = 1/2): symmetric average in gamma, O(delta^2)
        d = 1e-5
        return 0.5 * (_k0_raw(N, gamma - d, s, universal) + _k0_raw(N, gamma + d, s, universal))


def kernel_k0(params: ProblemParams, t, universal: float = UNIVERSAL):
    """Conjugated mode-0 kernel exp(-Q0 t) K_0(|t|)."""
    t = np.asarray(t, dtype=float)
    if np.any(t == 0):
        raise SingularityError("the kernel is singular at t = 0")
    val = np.exp(-q0_or_zero(params) * t) * k0_even(params.N, params.gamma, np.abs(t), universal)
    return val if val.ndim else float(val)


# --------------------------------------------------------- Fourier numeric

def _bernoulli3(x):
    return x ** 3 - 1.5 * x ** 2 + 0.5 * x


def _bernoulli5(x):
    return x ** 5 - 2.5 * x ** 4 + (5.0 / 3.0) * x ** 3 - x / 6.0


def symbol_expansion(params: ProblemParams, mode):
    """Theta_m(xi) / xi^(2 gamma) = 1 + c2 xi^-2 + e4 xi^-4 + O(xi^-6)."""
    hp = sy.half_params(params, mode)
    c2 = (4.0 / 3.0) * (_bernoulli3(hp.A_m) - _bernoulli3(hp.B_m))
    c4 = -(8.0 / 5.0) * (_bernoulli5(hp.A_m) - _bernoulli5(hp.B_m))
    return c2, c4 + 0.5 * c2 * c2


def _g_beta(beta, s):
    """(1/pi) int_0^inf (1 + xi^2)^beta cos(xi s) d xi for s > 0."""
    nu = beta + 0.5
    return (s / 2) ** (-nu) * special.kv(nu, s) / (math.sqrt(math.pi) * math.gamma(-beta))


def _fourier_nodes(cutoff, width=0.5):
    x, w = _GL16
    edges = np.arange(0.0, cutoff + 1e-12, width)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights


def _remainder_integral(r, nodes, weights, s, chunk=256):
    out = np.empty(s.size)
    for i in range(0, s.size, chunk):
        ss = s[i:i + chunk]
        out[i:i + chunk] = np.cos(np.outer(ss, nodes)) @ (weights * r) / math.pi
    return out


def km_fourier(params: ProblemParams, mode, s, cutoff: float = FOURIER_CUTOFF, check: bool = True):
    """Unconjugated mode kernel K_m(s), s > 0, from the inverse Fourier integral.

    Theta_m is split into (1+xi^2)^g + a1 (1+xi^2)^(g-1) + a2 (1+xi^2)^(g-2),
    whose transforms are Bessel-K closed forms, plus a remainder of order
    xi^(2g-6) integrated by Gauss-Legendre panels on [0, cutoff].
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0):
        raise SingularityError("K_m needs s > 0")
    g = params.gamma
    c2, e4 = symbol_expansion(params, mode)
    a1 = c2 - g
    a2 = e4 - g * (g - 1) / 2 - a1 * (g - 1)
    nodes, weights = _fourier_nodes(cutoff)
    q = 1.0 + nodes ** 2
    r = (np.real(sy.theta(params, mode, nodes)) - q ** g - a1 * q ** (g - 1) - a2 * q ** (g - 2))
    R = _remainder_integral(r, nodes, weights, s)
    if check:
        half = nodes <= cutoff / 2
        R2 = _remainder_integral(r[half], nodes[half], weights[half], s)
        if np.max(np.abs(R - R2)) > 1e-6:
            raise QuadratureFailure("Fourier remainder not converged under cutoff halving")
    return -(_g_beta(g, s) + a1 * _g_beta(g - 1, s) + a2 * _g_beta(g - 2, s) + R)


def kernel_km(params: ProblemParams, mode, t):
    """Conjugated kernel exp(-Q0 t) K_m(|t|) by Fourier quadrature."""
    t = np.asarray(t, dtype=float)
    if np.any(t == 0):
        raise SingularityError("the kernel is singular at t = 0")
    val = np.exp(-q0_or_zero(params) * t) * km_fourier(params, mode, np.abs(t).ravel()).reshape(t.shape)
    return val if val.ndim else float(val)


def km_funk_hecke(params: ProblemParams, mode, s):
    """K_m(s) from the angular integral over S^{N-1} of the flat kernel (oracle)."""
    N, g = params.N, params.gamma
    ell = int(mode)
    C = 4 ** g * math.gamma(N / 2 + g) / (math.pi ** (N / 2) * abs(math.gamma(-g)))
    area = 2 * math.pi ** ((N - 1) / 2) / math.gamma((N - 1) / 2)
    lam = (N - 2) / 2

    def P(x, phi):
        if N == 2:
            return np.cos(ell * phi)
        return special.eval_gegenbauer(ell, lam, x) / special.eval_gegenbauer(ell, lam, 1.0)

    out = []
    for si in np.atleast_1d(s):
        sh = 2 * math.sinh(si / 2) ** 2
        f = lambda ph: ((sh + 2 * math.sin(ph / 2) ** 2) ** (-(N + 2 * g) / 2)
                        * P(math.cos(ph), ph) * math.sin(ph) ** (N - 2))
        brk = [x for x in (si, 4 * si) if x < math.pi]
        v, _ = integrate.quad(f, 0, math.pi, points=brk or None, limit=400,
                              epsabs=0, epsrel=1e-12)
        out.append(C * 2 ** (-(N + 2 * g) / 2) * area * v)
    return np.array(out)


# ------------------------------------------------------------------ KernelSpec

def _cache_dir() -> Optional[Path]:
    d = os.environ.get("CSK_CACHE_DIR")
    return Path(d) if d else None


@dataclass
class KernelSpec:
    """Kernel of one (params, mode) with samples on a log-graded grid.

    The cache holds the smooth normalised kernel s^(1+2g) exp(2 A_m s) K_m(s) at 512 points on
    [1e-4, 20]; it is used for plotting and cheap lookups, while apply_op
    evaluates the kernel directly at its quadrature nodes.
    """
    params: ProblemParams
    mode: int
    form: KernelForm = KernelForm.FOURIER_NUMERIC
    universal: float = UNIVERSAL
    cache_s: np.ndarray = field(default=None, repr=False)
    cache_v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode != 0 and self.form == KernelForm.CLOSED_FORM_0:
            raise ValueError("closed form only for mode 0")

    @classmethod
    def for_mode(cls, params, mode, universal=UNIVERSAL):
        form = KernelForm.CLOSED_FORM_0 if int(mode) == 0 else KernelForm.FOURIER_NUMERIC
        return cls(params, int(mode), form, universal)

    def even(self, s):
        """K_m(s) for s > 0."""
        s = np.asarray(s, dtype=float)
        if self.form == KernelForm.CLOSED_FORM_0:
            return k0_even(self.params.N, self.params.gamma, s, self.universal)
        return km_fourier(self.params, self.mode, s.ravel(), check=False).reshape(s.shape)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t == 0):
            raise SingularityError("the kernel is singular at t = 0")
        return np.exp(-q0_or_zero(self.params) * t) * self.even(np.abs(t))

    @property
    def decay_rate(self) -> float:
        return 2 * sy.half_params(self.params, self.mode).A_m

    def _key(self):
        p = self.params
        txt = f"{CACHE_VERSION}|{p.N}|{p.gamma!r}|{self.mode}|{self.form.value}|{self.universal!r}"
        return hashlib.sha256(txt.encode()).hexdigest()[:16]

    def build_cache(self, n=512, s_min=1e-4, s_max=20.0):
        s = np.geomspace(s_min, s_max, n)
        d = _cache_dir()
        path = d / f"kernel_{self._key()}.txt" if d else None
        if path is not None and path.exists():
            arr = np.loadtxt(path)
            self.cache_s, self.cache_v = arr[:, 0], arr[:, 1]
            return self
        g = self.params.gamma
        K = self.even(s)
        self.cache_s = s
        self.cache_v = K * s ** (1 + 2 * g) * np.exp(self.decay_rate * s)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(path, np.column_stack([s, self.cache_v]), fmt="%.17g",
                       header=f"s  normalised K, {self.params} mode={self.mode}")
        return self

    def lookup(self, s):
        """Cubic interpolation of the cache in log s."""
        if self.cache_s is None:
            self.build_cache()
        s = np.asarray(s, dtype=float)
        g = self.params.gamma
        spline = CubicSpline(np.log(self.cache_s), self.cache_v)
        v = spline(np.log(s))
        return v * s ** (-1 - 2 * g) * np.exp(-self.decay_rate * s)


# --------------------------------------------------------------- quadrature

def _graded_panels(a, b, levels=48):
    """Geometric panels accumulating at a (singular end) inside [a, b]."""
    L = b - a
    edges = a + L * np.concatenate([[0.0], 2.0 ** -np.arange(levels, -1, -1)])
    return edges[:-1], edges[1:]


def _panel_nodes(lo, hi, rule=_GL8):
    x, w = rule
    lo, hi = np.asarray(lo)[:, None], np.asarray(hi)[:, None]
    return (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel(), (0.5 * (hi - lo) * w).ravel()


def _support_length(spec: KernelSpec, q0: float) -> float:
    rate = spec.decay_rate - abs(q0)
    if rate <= 0:
        raise QuadratureFailure("kernel does not decay after conjugation")
    return min(40.0 / rate + 1.0, 80.0)


def mode_constant(spec: KernelSpec) -> float:
    """C_m = Theta_m(0) - int_0^inf K_m(s) 2 (cosh(Q0 s) - 1) ds."""
    params = spec.params
    q0 = q0_or_zero(params)
    theta0 = float(np.real(sy.theta(params, spec.mode, 0.0)))
    if q0 == 0:
        return theta0
    L = _support_length(spec, q0)
    lo, hi = _graded_panels(0.0, 1.0)
    x1, w1 = _panel_nodes(lo, hi)
    edges = np.linspace(1.0, L, int(math.ceil((L - 1.0) / 0.25)) + 1)
    x2, w2 = _panel_nodes(edges[:-1], edges[1:], _GL16)
    x = np.concatenate([x1, x2])
    w = np.concatenate([w1, w2])
    integrand = spec.even(x) * 4 * np.sinh(q0 * x / 2) ** 2
    return theta0 - float(np.sum(w * integrand))


@dataclass
class OperatorStencil:
    """Action of the mode operator on the cubic B-spline basis of spacing h."""
    spec: KernelSpec
    h: float
    weights: np.ndarray  # O_n for n = -M..M
    constant: float

    @property
    def M(self) -> int:
        return (self.weights.size - 1) // 2


# unit cubic B-spline derivatives at the knots: (b', b'', b''' left piece, b''' right piece)
_KNOT_DERIVS = {
    0: (0.0, -2.0, -3.0, 3.0),
    1: (-0.5, 1.0, 3.0, -1.0),
    -1: (0.5, 1.0, 1.0, -3.0),
    2: (0.0, 0.0, -1.0, 0.0),
    -2: (0.0, 0.0, 0.0, 1.0),
}


def _near_zero_integrand(n, u, q):
    """e^{-qs}[b(n) - b(n - u)] + e^{qs}[b(n) - b(n + u)] for 0 < u <= 1 (s = u h, qh = q).

    Written through the exact cubic Taylor expansion on each side of the
    knot n so that no difference of nearly equal numbers is formed.
    """
    d1, d2, d3m, d3p = _KNOT_DERIVS[n]
    em, ep = np.exp(-q * u), np.exp(q * u)
    return (-2 * np.sinh(q * u) * u * d1 - np.cosh(q * u) * u * u * d2
            + (u ** 3 / 6) * (em * d3m - ep * d3p))


def build_stencil(spec: KernelSpec, h: float) -> OperatorStencil:
    """O_n = C b(n) + int K~(s) [b(n) - b(n - s/h)] ds for n = -M..M."""
    params = spec.params
    q0 = q0_or_zero(params)
    L = _support_length(spec, q0)
    M = int(math.ceil(L / h)) + 2
    C = mode_constant(spec)
    # regular panels [k h, (k+1) h], k = 1..M+2, shared by all entries
    kk = np.arange(1, M + 3)
    x, w = _GL8
    theta = 0.5 * (x + 1.0)
    us = kk[:, None] + theta[None, :]
    ws = np.broadcast_to(0.5 * h * w, us.shape)
    Kp = spec.even(us * h)
    Eplus = ws * Kp * np.exp(-q0 * us * h)   # s > 0
    Eminus = ws * Kp * np.exp(q0 * us * h)   # s < 0
    # graded first panel (0, h]
    glo, ghi = _graded_panels(0.0, 1.0)
    u0, w0 = _panel_nodes(glo, ghi)
    K0 = spec.even(u0 * h) * h * w0
    tail_mass = Eplus.sum() + Eminus.sum()
    O = np.zeros(2 * M + 1)
    for n in range(-2, 3):
        bn = float(_bspline(n))
        near = np.sum(K0 * _near_zero_integrand(n, u0, q0 * h))
        far = bn * tail_mass - np.sum(Eplus * _bspline(n - us)) - np.sum(Eminus * _bspline(n + us))
        O[M + n] = C * bn + near + far
    # |n| >= 3: only -int K~(s) b(n - s/h) ds over the four panels under the spline
    nn = np.arange(3, M + 1)
    bd = {d: _bspline(d - theta) for d in (-1, 0, 1, 2)}
    for E, sgn in ((Eplus, 1), (Eminus, -1)):
        acc = np.zeros(nn.size)
        for d, bvals in bd.items():
            j = nn - d  # panel index k
            ok = (j >= 1) & (j <= M + 2)
            acc[ok] += E[j[ok] - 1] @ bvals
        O[M + sgn * nn] = -acc
    return OperatorStencil(spec, h, O, C)


def _padded(v: GridFunction, pad: float):
    """Extend samples by the declared exponential tails over `pad` on each side."""
    h = v.h
    k = int(math.ceil(pad / h))
    t_left = v.t_min - h * np.arange(k, 0, -1)
    t_right = v.t_max + h * np.arange(1, k + 1)
    vals = v.values
    scale = np.max(np.abs(vals)) if vals.size else 0.0

    def tail(end_val, rate, dist, label):
        if abs(end_val) <= 1e-14 * max(scale, 1e-300):
            return np.zeros_like(dist)
        if math.isinf(rate):
            raise TailUndeclared(f"{label} end sample is not small but no decay is declared")
        return end_val * np.exp(-rate * dist)

    left = tail(vals[0], v.decay_minus, v.t_min - t_left, "left")
    right = tail(vals[-1], v.decay_plus, t_right - v.t_max, "right")
    return np.concatenate([left, vals, right]), k


_STENCILS: dict = {}


def _stencil_for(params, mode, h, universal):
    key = (params, int(mode), round(h, 15), universal)
    st = _STENCILS.get(key)
    if st is None:
        st = build_stencil(KernelSpec.for_mode(params, mode, universal), h)
        _STENCILS[key] = st
    return st


def apply_op(params: ProblemParams, mode, v: GridFunction, t=None, kappa: float = 0.0,
             universal: float = UNIVERSAL):
    """(P~_m - kappa) v on the grid of v, or at the points t (interpolated)."""
    h = v.h
    if h > 0.05 + 1e-12:
        raise GridTooCoarse(f"grid spacing {h} exceeds 0.05")
    st = _stencil_for(params, mode, h, universal)
    pad = st.M * h
    vals, k = _padded(v, pad)
    c = _bspline_coeffs(vals)
    full = np.convolve(c, st.weights)
    out = full[st.M: st.M + vals.size][k: k + v.n] - kappa * v.values
    if t is None:
        return GridFunction(v.t_min, v.t_max, out, v.decay_plus, v.decay_minus)
    return np.interp(t, v.t, out)


def calibrate_universal(params: ProblemParams) -> float:
    """Universal factor of the mode-0 kernel that makes P~(1) = A."""
    spec = KernelSpec(params, 0, KernelForm.CLOSED_FORM_0, 1.0)
    theta0 = float(np.real(sy.theta(params, 0, 0.0)))
    shape_integral = theta0 - mode_constant(spec)
    return (theta0 - sy.A_constant(params)) / shape_integral
