"""Nonlinear problems: the radial profile equation on the cylinder and the ball problem."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from . import indicial, kernels
from . import symbols as sy
from .errors import (DomainError, NewtonDivergence, NonPositiveIterate, NoConvergence,
                     QuadratureFailure)
from .grid import GridFunction
from .symbols import ProblemParams

MAX_NEWTON_NODES = 400


# ------------------------------------------------------------ cylinder ODE

@dataclass
class RadialProfile:
    grid: GridFunction
    params: ProblemParams
    converged: bool
    residual_norm: float
    iterations: int = 0
    history: list = field(default_factory=list)


def operator_matrix(params: ProblemParams, template: GridFunction, mode: int = 0) -> np.ndarray:
    """Dense matrix of v -> apply_op(v) on the grid and tail model of `template`."""
    n = template.n
    P = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        P[:, j] = kernels.apply_op(params, mode, template.with_values(e)).values
    return P


def _tail_rates(params: ProblemParams):
    """Growth rate of perturbations of v = 1 at t -> -inf and decay rate at t -> +inf."""
    rep = indicial.indicial_roots(params, 0, indicial.Location.ORIGIN)
    if abs(rep.gamma_plus.imag) > 0:
        return None
    sigma0 = rep.gamma_plus.real + (params.N - 2 * params.gamma) / 2
    q = sy.q0(params)
    # at +inf both q -+ sigma0 may decay; the slower one is the generic approach
    right = q - sigma0 if q - sigma0 > 0 else q + sigma0
    return sigma0 - q, right


def _pin_rows(v: GridFunction, params: ProblemParams, rates):
    """Residual and Jacobian rows that pin the declared tails at both grid ends."""
    h = v.h
    rows = []
    for end, inner, decay, rate in ((0, 1, v.decay_minus, None if rates is None else rates[0]),
                                    (-1, -2, v.decay_plus, None if rates is None else rates[1])):
        if math.isinf(decay):
            rows.append((end, inner, 0.0, 0.0))  # compact support: v_end = 0
        elif decay > 0:
            rows.append((end, inner, 0.0, math.exp(-decay * h)))
        elif rate is not None and rate > 0:
            rows.append((end, inner, 1.0, math.exp(-rate * h)))  # v -> 1
        else:
            rows.append(None)
    return rows


def newton_profile(params: ProblemParams, initial: GridFunction, tol: float = 1e-8,
                   max_iter: int = 40, pin_tails: bool = True) -> RadialProfile:
    """Damped Newton for apply_op(v) = A v^p (mode 0) on the grid of `initial`."""
    if tol < 1e-8:
        raise DomainError("tol must be at least 1e-8")
    if initial.n > MAX_NEWTON_NODES:
        raise DomainError(f"dense Newton limited to {MAX_NEWTON_NODES} nodes")
    if np.any(initial.values <= 0):
        raise NonPositiveIterate("initial profile must be positive")
    p = params.require_p()
    A = sy.A_constant(params)
    P = operator_matrix(params, initial)
    rows = _pin_rows(initial, params, _tail_rates(params)) if pin_tails else [None, None]
    inner = initial.interior(0.8)

    def residual(v):
        F = P @ v - A * v ** p
        for r in rows:
            if r is not None:
                end, nb, lim, fac = r
                F[end] = (v[end] - lim) - fac * (v[nb] - lim)
        return F

    def jacobian(v):
        J = P - np.diag(p * A * v ** (p - 1))
        for r in rows:
            if r is not None:
                end, nb, _, fac = r
                J[end, :] = 0.0
                J[end, end] = 1.0
                J[end, nb] = -fac
        return J

    def norm(F):
        return float(np.max(np.abs(F[inner])))

    v = initial.values.copy()
    F = residual(v)
    hist = [norm(F)]
    it = 0
    while hist[-1] > tol:
        if it >= max_iter:
            raise NewtonDivergence(f"no convergence in {max_iter} Newton steps (residual {hist[-1]:.3e})")
        dv = np.linalg.solve(jacobian(v), -F)
        alpha = 1.0
        while True:
            trial = v + alpha * dv
            if np.all(trial > 0):
                Ft = residual(trial)
                if np.max(np.abs(Ft)) <= (1 - 1e-4 * alpha) * np.max(np.abs(F)) or alpha < 1e-3:
                    break
            alpha *= 0.5
            if alpha < 1e-6:
                if not np.all(trial > 0):
                    raise NonPositiveIterate("line search could not keep the iterate positive")
                raise NewtonDivergence("line search failed")
        v, F = trial, Ft
        hist.append(norm(F))
        it += 1
    return RadialProfile(initial.with_values(v), params, True, hist[-1], it, hist)


def profile_residual(params: ProblemParams, v: GridFunction) -> GridFunction:
    """apply_op(v) - A v^p on the grid of v."""
    p = params.require_p()
    out = kernels.apply_op(params, 0, v).values - sy.A_constant(params) * v.values ** p
    return v.with_values(out)


def refine(v: GridFunction) -> GridFunction:
    """Cubic interpolation onto the grid with half the spacing."""
    cs = CubicSpline(v.t, v.values)
    n = 2 * v.n - 1
    t = np.linspace(v.t_min, v.t_max, n)
    return GridFunction(v.t_min, v.t_max, cs(t), v.decay_plus, v.decay_minus)


def bubble_profile(params: ProblemParams, t_min: float, t_max: float, n: int) -> GridFunction:
    """Standard bubble on the cylinder at the critical exponent, scaled to solve P v = A v^p."""
    N, g = params.N, params.gamma
    p = params.critical_p
    c = 2 ** (2 * g) * math.gamma((N + 2 * g) / 2) / math.gamma((N - 2 * g) / 2)
    a = (c / sy.hardy_constant(N, g)) ** (1 / (p - 1))
    e = (N - 2 * g) / 2
    return GridFunction.from_function(lambda t: a * (2 * np.cosh(t)) ** (-e), t_min, t_max, n, e, e)


# --------------------------------------------------------------- ball

@dataclass
class BallSolution:
    lam: float
    r: np.ndarray
    w: np.ndarray
    iterations: int
    sup_norm: float
    defect: float
    history: list = field(default_factory=list, repr=False)
    params: ProblemParams = None
    n_r: int = 0
    n_ang: int = 0


def ball_beta(params: ProblemParams) -> float:
    p = params.require_p()
    return p * (params.N - 2 * params.gamma) - (params.N + 2 * params.gamma)


def _sphere_area(d: int) -> float:
    """Area of the unit sphere S^d."""
    return 2 * math.pi ** ((d + 1) / 2) / math.gamma((d + 1) / 2)


class _RadialIntegral:
    """I(r0) = int_0^r0 r^(g-1) (1+r)^(-N/2) dr, tabulated in log r0 by adaptive quadrature."""

    def __init__(self, N, g, lo=-40.0, hi=40.0, n=1601):
        self.N, self.g, self.lo, self.hi = N, g, lo, hi
        x = np.linspace(lo, hi, n)
        # substitution r = u^(1/g) makes the integrand smooth: I = (1/g) int_0^(r0^g) (1 + u^(1/g))^(-N/2) du
        f = lambda u: (1 + u ** (1 / g)) ** (-N / 2) / g
        vals = np.empty(n)
        prev_u, acc = 0.0, 0.0
        for i, xi in enumerate(x):
            u = math.exp(g * xi)
            part, err = integrate.quad(f, prev_u, u, epsabs=0, epsrel=1e-13, limit=200)
            if err > 1e-10 * max(acc + part, 1e-300):
                raise QuadratureFailure("radial Green integral did not converge")
            acc += part
            prev_u = u
            vals[i] = acc
        self.total = math.gamma(g) * math.gamma(N / 2 - g) / math.gamma(N / 2)
        self.spline = CubicSpline(x, np.log(vals))

    def __call__(self, r0):
        r0 = np.asarray(r0, dtype=float)
        with np.errstate(divide="ignore"):
            x = np.log(r0)
        out = np.empty(r0.shape)
        lo = x < self.lo
        hi = x > self.hi
        mid = ~(lo | hi)
        out[mid] = np.exp(self.spline(x[mid]))
        out[lo] = r0[lo] ** self.g / self.g
        tail = 2.0 / (self.N - 2 * self.g)
        out[hi] = self.total - tail * r0[hi] ** (self.g - self.N / 2)
        return out


@lru_cache(maxsize=16)
def _radial_integral(N, g):
    return _RadialIntegral(N, g)


def green_constant_literature(N, gamma) -> float:
    """Riesz normalisation Gamma(N/2) / (2^(2g) pi^(N/2) Gamma(g)^2) of the ball Green's function."""
    return math.gamma(N / 2) / (2 ** (2 * gamma) * math.pi ** (N / 2) * math.gamma(gamma) ** 2)


def torsion_closed_form(N, gamma, r):
    r = np.asarray(r, dtype=float)
    c = 2 ** (-2 * gamma) * math.gamma(N / 2) / (math.gamma((N + 2 * gamma) / 2) * math.gamma(1 + gamma))
    return c * np.clip(1 - r ** 2, 0, None) ** gamma


@lru_cache(maxsize=16)
def green_constant(N, gamma) -> float:
    """C(N, g) fixed by the torsion value at the centre (a 1-D quadrature).

    At x = 0, r0 = (1 - rho^2)/rho^2 and int G(0, y) dy reduces to
    |S^(N-1)| int_0^1 rho^(2g-1) I(r0) d rho.
    """
    I = _radial_integral(N, gamma)
    # rho = s^(1/(2g)) absorbs the rho^(2g-1) weight
    f = lambda s: float(I(np.array([(1 - s ** (1 / gamma)) / s ** (1 / gamma)]))[0]) / (2 * gamma)
    val, err = integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-12, limit=400)
    return float(torsion_closed_form(N, gamma, 0.0)) / (_sphere_area(N - 1) * val)


def _tanh_sinh(n_half: int, step: float):
    """Tanh-sinh nodes on (0, 1) returned with their distances to both ends."""
    k = np.arange(-n_half, n_half + 1) * step
    s = 0.5 * math.pi * np.sinh(k)
    # x = (1 + tanh s)/2 with complements computed without cancellation
    small = 1 / (1 + np.exp(2 * np.abs(s)))
    x = np.where(s >= 0, 1 - small, small)
    one_minus = np.where(s >= 0, small, 1 - small)
    with np.errstate(over="ignore"):
        w = step * 0.25 * math.pi * np.cosh(k) / np.cosh(s) ** 2
    keep = w > 1e-300
    return x[keep], one_minus[keep], w[keep]


def _angular_nodes(n_ang: int, panels: int = 8):
    x, w = np.polynomial.legendre.leggauss(n_ang)
    u = (x + 1) / 2
    nodes = (np.arange(panels)[:, None] + u[None, :]).ravel() / panels
    weights = np.tile(w / 2, panels) / panels
    return nodes, weights


def _angular_average(N, g, I, r, rho, a, n_ang):
    """int over S^(N-1) of |x - y|^(2g-N) I(r0) for |x| = r, |y| = rho, |r - rho| = a (arrays)."""
    b = 2 * np.sqrt(r * rho)
    c = np.maximum(2 * a / np.maximum(b, 1e-300), 1e-15)
    c = np.minimum(c, math.pi)
    V = np.arcsinh(math.pi / c)
    u, wu = _angular_nodes(n_ang)
    v = V[:, None] * u[None, :]
    phi = c[:, None] * np.sinh(v)
    dphi = (c * V)[:, None] * np.cosh(v) * wu[None, :]
    D2 = a[:, None] ** 2 + (b[:, None] * np.sin(phi / 2)) ** 2
    r0 = (1 - r ** 2)[:, None] * (1 - rho ** 2)[:, None] / D2
    f = D2 ** ((2 * g - N) / 2) * I(r0) * np.sin(phi) ** (N - 2)
    return _sphere_area(N - 2) * np.sum(f * dphi, axis=1)


@dataclass
class BallOperator:
    """Quadrature form of T: T(w)(r_i) = lambda A sum_q W[i, q] rho_q^beta (1 + w(rho_q))^p."""
    params: ProblemParams
    r: np.ndarray
    rho: np.ndarray  # (n_r, n_q) radial quadrature nodes per output node
    W: np.ndarray    # (n_r, n_q) weights including rho^(N-1) and the Green constant
    beta: float


def ball_nodes(n_r: int) -> np.ndarray:
    """Output radii in (0, 1), clustered at both ends."""
    k = np.arange(1, n_r + 1)
    return (1 - np.cos(math.pi * (k - 0.5) / n_r)) / 2


@lru_cache(maxsize=8)
def _ball_operator(N, g, p, n_r, n_ang, with_beta=True, n_half=40, step=0.09):
    params = ProblemParams(N, g, p)
    beta = ball_beta(params) if with_beta else 0.0
    I = _radial_integral(N, g)
    C = green_constant(N, g)
    r = ball_nodes(n_r)
    x, xc, w = _tanh_sinh(n_half, step)
    rows_rho, rows_W = [], []
    for ri in r:
        # [0, r]: rho = r x, distance to r is r (1 - x); [r, 1]: rho = r + (1 - r) x
        rho1, a1, w1 = ri * x, ri * xc, ri * w
        rho2, a2, w2 = ri + (1 - ri) * x, (1 - ri) * x, (1 - ri) * w
        rho = np.concatenate([rho1, rho2])
        a = np.concatenate([a1, a2])
        wt = np.concatenate([w1, w2])
        ok = (rho > 0) & (rho < 1) & (a > 0)
        rho, a, wt = rho[ok], a[ok], wt[ok]
        phi = _angular_average(N, g, I, np.full(rho.shape, ri), rho, a, n_ang)
        rows_rho.append(rho)
        rows_W.append(C * wt * rho ** (N - 1) * phi)
    m = max(len(v) for v in rows_rho)
    R = np.full((n_r, m), 0.5)
    Wm = np.zeros((n_r, m))
    for i, (rr, ww) in enumerate(zip(rows_rho, rows_W)):
        R[i, :rr.size] = rr
        Wm[i, :ww.size] = ww
    return BallOperator(params, r, R, Wm, beta)


def ball_operator(params: ProblemParams, n_r: int, n_ang: int, with_beta: bool = True) -> BallOperator:
    p = params.require_p() if with_beta else (params.p or params.critical_p)
    return _ball_operator(params.N, params.gamma, float(p), int(n_r), int(n_ang), with_beta)


def torsion_solution(params: ProblemParams, n_r: int = 48, n_ang: int = 24):
    """Constant-source solution int_B G(x, y) dy at the output radii."""
    op = ball_operator(params, n_r, n_ang, with_beta=False)
    return op.r, op.W.sum(axis=1)


def _interp_profile(op: BallOperator, w: np.ndarray, g: float) -> np.ndarray:
    """Positive linear interpolation of w / (1 - r^2)^g to the quadrature radii."""
    scaled = w / (1 - op.r ** 2) ** g
    vals = np.interp(op.rho.ravel(), op.r, scaled).reshape(op.rho.shape)
    return vals * (1 - op.rho ** 2) ** g


def apply_T(op: BallOperator, lam: float, w: np.ndarray) -> np.ndarray:
    p = op.params.require_p()
    A = sy.A_constant(op.params)
    wq = _interp_profile(op, w, op.params.gamma)
    src = op.rho ** op.beta * (1 + wq) ** p
    return lam * A * np.sum(op.W * src, axis=1)


def picard_ball(params: ProblemParams, lam: float, n_r: int = 48, n_ang: int = 24,
                tol: float = 1e-8, max_iter: int = 500) -> BallSolution:
    """Minimal solution of w = T(lambda, w) by Picard iteration from w = 0."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    beta = ball_beta(params)
    g = params.gamma
    if not (-2 * g < beta < 0):
        raise DomainError(f"beta = {beta} outside (-2 gamma, 0)")
    op = ball_operator(params, n_r, n_ang)
    w = np.zeros(op.r.size)
    hist = []
    for k in range(1, max_iter + 1):
        nxt = apply_T(op, lam, w)
        if not np.all(np.isfinite(nxt)) or np.max(nxt) > 1e12:
            raise NoConvergence(f"Picard iteration blew up at lambda = {lam}")
        defect = float(np.max(np.abs(nxt - w)))
        hist.append(nxt)
        w = nxt
        if defect < tol:
            break
    else:
        raise NoConvergence(f"no convergence in {max_iter} iterations at lambda = {lam}")
    final_defect = float(np.max(np.abs(apply_T(op, lam, w) - w)))
    return BallSolution(lam, op.r.copy(), w, k, float(np.max(w)), final_defect, hist, params, n_r, n_ang)


@dataclass
class BoundReport:
    exponent: float
    C0: float
    local_exponent: float
    holds: bool


def uniform_bound_check(sol: BallSolution) -> BoundReport:
    """Smallest C0 with w(r) <= C0 r^(-e) on (0, 1/2], e = (p(N-2g) - N)/(p - 1)."""
    p = sol.params.require_p()
    N, g = sol.params.N, sol.params.gamma
    e = (p * (N - 2 * g) - N) / (p - 1)
    r = np.append(sol.r[sol.r <= 0.5], 0.5)
    w = np.append(sol.w[sol.r <= 0.5], np.interp(0.5, sol.r, sol.w))
    C0 = float(np.max(w * r ** e))
    small = sol.r[:6]
    slope = float(np.polyfit(np.log(small), np.log(sol.w[:6]), 1)[0])
    return BoundReport(e, C0, slope, bool(np.isfinite(C0) and slope >= -e))


def kelvin_transform(r, w, N, gamma):
    """u(s) = s^-(N-2g) w(1/s) sampled at s = 1/r (returned in increasing s)."""
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(r <= 0):
        raise DomainError("Kelvin transform needs r > 0")
    s = 1.0 / r[::-1]
    return s, s ** (-(N - 2 * gamma)) * w[::-1]
