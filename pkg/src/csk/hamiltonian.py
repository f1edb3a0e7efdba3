"""Special defining function, the degenerate-elliptic extension of v and the conformal Hamiltonian.

Coordinates on the extension: rho in (0, 2) with tau = (4 - rho^2)/(4 + rho^2)
and X = 1 - tau^2 = (4 rho / (4 + rho^2))^2. For each frequency xi of v the
extension is a Fourier multiplier m(rho, xi) built from the regular solution
of the hypergeometric mode equation with xi replaced by xi - i Q0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from . import specialfn as sf
from . import symbols as sy
from .errors import (DomainError, FrequencyPoleCollision, GridTooCoarse, NonConvergence,
                     QuadratureFailure, TailUndeclared)
from .grid import GridFunction
from .symbols import ProblemParams

NEAR_SPLIT = 0.05        # X below this uses the expansion at the conformal infinity
MAX_SPACING = 0.05


# ------------------------------------------------------------ rho star

def alpha_norm(params: ProblemParams) -> float:
    p = params.require_p()
    N, g = params.N, params.gamma
    q = g / (p - 1)
    return math.exp(math.lgamma(N / 2) + math.lgamma(g) - math.lgamma(g + q) - math.lgamma(N / 2 - q))


def _x_of_rho(rho):
    return (4 * rho / (4 + rho ** 2)) ** 2


def _dx_drho(rho):
    y = 4 * rho / (4 + rho ** 2)
    return 2 * y * 4 * (4 - rho ** 2) / (4 + rho ** 2) ** 2


def rho_star(params: ProblemParams, rho):
    """rho*(rho) for rho in (0, 2]."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0) or np.any(rho > 2):
        raise DomainError("rho must lie in (0, 2]")
    p = params.require_p()
    N, g = params.N, params.gamma
    a, b, c = g / (p - 1), (N - 2 * g) / 2 - g / (p - 1), N / 2
    X = _x_of_rho(rho)
    Y = ((4 - rho ** 2) / (4 + rho ** 2)) ** 2
    F = np.empty(rho.shape)
    near = Y > 0.5
    if np.any(near):
        F[near] = np.real(sf.hyp2f1_near_one(a, b, c, X[near]))
    if np.any(~near):
        F[~near] = np.real(sf.hyp2f1(a, b, c, Y[~near]))
    val = (X ** ((N - 2 * g) / 4) * F / alpha_norm(params)) ** (2 / (N - 2 * g))
    return val if val.ndim else float(val)


@dataclass
class DefiningFunction:
    params: ProblemParams
    rho: np.ndarray
    rho_star: np.ndarray
    rho_star_0: float
    alpha_norm: float

    def rho_of(self, rs):
        """Inverse map rho*(rho) -> rho by monotone cubic interpolation."""
        f = PchipInterpolator(self.rho_star, self.rho)
        return f(rs)


def defining_function(params: ProblemParams, n: int = 2000) -> DefiningFunction:
    rho = np.geomspace(1e-6, 2.0, n)
    rs = rho_star(params, rho)
    if not np.all(np.diff(rs) > 0):
        raise NonConvergence("rho* is not strictly increasing on the sample grid")
    al = alpha_norm(params)
    return DefiningFunction(params, rho, rs, al ** (-2 / (params.N - 2 * params.gamma)), al)


# ------------------------------------------------------------ quadrature in rho

def rho_quadrature(gamma: float, n: int = 8, levels: int = 30):
    """Nodes and plain weights on (0, 2) for integrands ~ rho^(2g-1) at 0.

    Gauss-Jacobi with weight rho^(2g-1) on the innermost panel, Gauss-Legendre
    on geometric panels towards 0 and on uniform panels over [1, 2].
    """
    eps = 2.0 ** -levels
    beta = 2 * gamma - 1
    xj, wj = special.roots_jacobi(n, 0.0, beta)
    r0 = eps * (1 + xj) / 2
    w0 = (eps / 2) ** (beta + 1) * wj / r0 ** beta
    edges = np.concatenate([2.0 ** -np.arange(levels, -1, -1), [1.25, 1.5, 1.75, 2.0]])
    x, w = np.polynomial.legendre.leggauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    r1 = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    w1 = (0.5 * (b - a) * w).ravel()
    return np.concatenate([r0, r1]), np.concatenate([w0, w1])


# ------------------------------------------------------------ multipliers

def _series2d(a, b, c, z, tol=1e-15, max_terms=4000):
    """2F1(a_k, b_k; c; z_j) for column vectors a, b and a row vector z."""
    term = np.ones(np.broadcast(a, z).shape, dtype=complex)
    total = term.copy()
    prev = False
    for n in range(max_terms):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * z
        total += term
        small = np.all(np.abs(term) <= tol * np.maximum(np.abs(total), 1e-300))
        if small and prev:
            return total
        prev = small
    raise NonConvergence("hypergeometric series in the extension did not converge")


def _near_parts(N, g, s, X):
    """P(X) = F1 + S X^g F2 and dP/dX at small X, for each s (column) and X (row)."""
    A, B = N / 4 + g / 2, N / 4 - g / 2
    F1 = _series2d(B + s, B - s, 1 - g, X)
    F1d = (B + s) * (B - s) / (1 - g) * _series2d(B + s + 1, B - s + 1, 2 - g, X)
    F2 = _series2d(A - s, A + s, 1 + g, X)
    F2d = (A - s) * (A + s) / (1 + g) * _series2d(A - s + 1, A + s + 1, 2 + g, X)
    return F1, F1d, F2, F2d


def _symbol_over_d(params, s):
    """S = Theta~(xi) / d_gamma written through s = (Q0 + i xi)/2."""
    N, g = params.N, params.gamma
    A, B = N / 4 + g / 2, N / 4 - g / 2
    for w in (A + s, A - s, B + s, B - s):
        n = np.round(np.real(w))
        if np.any((n <= 0) & (np.abs(w - n) < 1e-10)):
            raise FrequencyPoleCollision("a frequency hits a pole of the conjugate symbol")
    lg = (sf._ln_gamma_raw(A + s) + sf._ln_gamma_raw(A - s)
          - sf._ln_gamma_raw(B + s) - sf._ln_gamma_raw(B - s))
    return 2 ** (2 * g) * np.exp(lg) / sy.d_gamma(g)


def _multiplier_near(params, s, s0, X):
    g = params.gamma
    F1, F1d, F2, F2d = _near_parts(params.N, g, s, X)
    G1, G1d, G2, G2d = _near_parts(params.N, g, s0, X)
    S, S0 = _symbol_over_d(params, s), _symbol_over_d(params, s0)
    Xg = X ** g
    P = F1 + S * Xg * F2
    Pd = F1d + S * (g * X ** (g - 1) * F2 + Xg * F2d)
    P0 = G1 + S0 * Xg * G2
    P0d = G1d + S0 * (g * X ** (g - 1) * G2 + Xg * G2d)
    m = P / P0
    mX = (Pd * P0 - P * P0d) / P0 ** 2
    P0r = np.real(P0[0])
    rs_log_der = 1 / (2 * X) + (2 / (params.N - 2 * g)) * np.real(P0d[0]) / P0r
    rs = np.sqrt(X) * P0r ** (2 / (params.N - 2 * g))
    return m, mX, rs, rs * rs_log_der


def _multiplier_far(params, s, s0, X):
    N, g = params.N, params.gamma
    A, B = N / 4 + g / 2, N / 4 - g / 2
    Y = 1 - X

    def parts(ss):
        G = np.exp(sf._ln_gamma_raw(A + ss) + sf._ln_gamma_raw(A - ss)
                   - math.lgamma(N / 2) - math.lgamma(g))
        F = _series2d(B + ss, B - ss, N / 2, Y)
        Fd = (B + ss) * (B - ss) / (N / 2) * _series2d(B + ss + 1, B - ss + 1, N / 2 + 1, Y)
        return G * F, G * Fd

    Q, Qd = parts(s)
    Q0, Q0d = parts(s0)
    m = Q / Q0
    mX = -(Qd * Q0 - Q * Q0d) / Q0 ** 2
    Q0r = np.real(Q0[0])
    rs = np.sqrt(X) * Q0r ** (2 / (N - 2 * g))
    rs_log_der = 1 / (2 * X) - (2 / (N - 2 * g)) * np.real(Q0d[0]) / Q0r
    return m, mX, rs, rs * rs_log_der


def extension_multiplier(params: ProblemParams, xi, rho):
    """m(rho, xi), dm/dX, rho*(rho) and d rho*/dX for frequencies xi (rows) and radii rho (columns)."""
    q0 = sy.q0(params)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    s = (0.5 * (q0 + 1j * xi))[:, None]
    s0 = np.array([[0.5 * q0 + 0j]])
    X = _x_of_rho(rho)
    m = np.empty((xi.size, rho.size), dtype=complex)
    mX = np.empty_like(m)
    rs = np.empty(rho.size)
    drs = np.empty(rho.size)
    near = X <= NEAR_SPLIT
    for sel, fn in ((near, _multiplier_near), (~near, _multiplier_far)):
        if np.any(sel):
            a, b, c, d = fn(params, s, s0, X[sel][None, :])
            m[:, sel], mX[:, sel], rs[sel], drs[sel] = a, b, np.ravel(c), np.ravel(d)
    return m, mX, rs, drs


# ------------------------------------------------------------ extension field

@dataclass
class ExtensionField:
    params: ProblemParams
    t: np.ndarray
    rho: np.ndarray
    weights: np.ndarray
    rho_star: np.ndarray
    drho_star: np.ndarray        # d rho*/d rho
    V: np.ndarray                # (n_rho, n_t)
    Vt: np.ndarray
    Vrho: np.ndarray             # d V*/d rho
    window: slice

    @property
    def neumann(self) -> np.ndarray:
        """(rho*)^(1-2g) d V*/d rho* at every node."""
        g = self.params.gamma
        return (self.rho_star ** (1 - 2 * g) / self.drho_star)[:, None] * self.Vrho

    @property
    def lam(self) -> np.ndarray:
        return self.rho_star / self.rho

    def weight_e(self, kind: str = "star"):
        """(e*, e*_1, e*_2) per rho node."""
        r = self.rho
        lam = self.lam
        e = lam ** 2 * (1 + r ** 2 / 4) * (1 - r ** 2 / 4) ** (self.params.N - 1)
        e1 = e / lam ** 2
        e2 = e / (lam ** 2 * (1 + r ** 2 / 4) ** 2)
        return e, e1, e2


STEP_HALF_WIDTH = 20.0   # the tanh step is flat to rounding beyond this distance


def _tail(end, rate, k, h, scale):
    if k == 0:
        return np.zeros(0)
    if rate == 0:
        return np.full(k, end)
    if abs(end) <= 1e-15 * scale:
        return np.zeros(k)
    if math.isinf(rate):
        raise DomainError("end sample is not small but compact support is declared")
    return end * np.exp(-rate * h * np.arange(1, k + 1))


def _padded_profile(v: GridFunction):
    """Samples extended by the declared tails: exponential decay to 0, or constant when the rate is 0.

    Returns the extended samples, the levels at both ends, the offset of the
    window and the centre of the step between the levels.
    """
    vals = v.values
    scale = max(np.max(np.abs(vals)), 1e-300)
    h = v.h
    lengths = []
    for end, rate in ((vals[0], v.decay_minus), (vals[-1], v.decay_plus)):
        if math.isinf(rate) and abs(end) > 1e-14 * scale:
            raise TailUndeclared("end sample is not small but compact support is declared")
        if rate == 0 or abs(end) <= 1e-15 * scale or math.isinf(rate):
            k = 0
        else:
            k = int(math.ceil(math.log(abs(end) / (1e-16 * scale)) / (rate * h)))
        lengths.append(min(k, int(60.0 / h)))
    lev_l = vals[0] if v.decay_minus == 0 else 0.0
    lev_r = vals[-1] if v.decay_plus == 0 else 0.0
    centre = 0.5 * (v.t_min + v.t_max)
    if lev_l != lev_r:
        half = 0.5 * (v.t_max - v.t_min)
        need = int(math.ceil(max(STEP_HALF_WIDTH - half, 0.0) / h))
        lengths = [max(k, need) for k in lengths]
    total = lengths[0] + lengths[1] + v.n
    nfft = 1 << int(math.ceil(math.log2(total + 16)))
    lengths[1] += nfft - total
    left = _tail(vals[0], v.decay_minus, lengths[0], h, scale)[::-1]
    right = _tail(vals[-1], v.decay_plus, lengths[1], h, scale)
    return np.concatenate([left, vals, right]), lev_l, lev_r, lengths[0], centre


def _step(t):
    return 0.5 * (1 + np.tanh(t)), 0.5 / np.cosh(t) ** 2


def extension_field(params: ProblemParams, v: GridFunction, n_tau: int = 8,
                    levels: int = 30) -> ExtensionField:
    """Mode-0 extension V*(rho, t) of v with its t and rho derivatives.

    v is split as lev_l + (lev_r - lev_l) sigma(t - c) + u with a tanh step sigma
    and u decaying at both ends. u goes through the multiplier directly; the
    step goes through it via sigma' and the multiplier divided by i xi.
    """
    if v.h > MAX_SPACING + 1e-12:
        raise GridTooCoarse(f"grid spacing {v.h} exceeds {MAX_SPACING}")
    full, lev_l, lev_r, offset, centre = _padded_profile(v)
    n = full.size
    h = v.h
    tt = v.t_min + h * (np.arange(n) - offset)
    jump = lev_r - lev_l
    sig, dsig = _step(tt - centre)
    u = full - lev_l - jump * sig
    if abs(u[0]) > 1e-6 * max(np.max(np.abs(full)), 1e-300) or abs(u[-1]) > 1e-6 * max(np.max(np.abs(full)), 1e-300):
        raise DomainError("profile does not reach its tail level inside the extended window")
    uh = np.fft.rfft(u)
    sh = np.fft.rfft(dsig) * jump
    xi = 2 * math.pi * np.fft.rfftfreq(n, d=h)
    mag = np.abs(uh) + np.abs(sh)
    keep = mag > 1e-17 * np.max(mag) if np.any(mag) else np.zeros(mag.shape, bool)
    keep[0] = keep[0] or jump != 0
    rho, w = rho_quadrature(params.gamma, n_tau, levels)
    Vh = np.zeros((rho.size, uh.size), dtype=complex)   # transform of V - levels
    Vth = np.zeros_like(Vh)                               # transform of d_t V
    Vrh = np.zeros_like(Vh)                               # transform of dV/dX
    _, _, rs, drs = extension_multiplier(params, [0.0], rho)
    if np.any(keep):
        xk = xi[keep]
        m, mX, rs, drs = extension_multiplier(params, xk, rho)
        ixi = 1j * xk[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            mq = (m - 1) / ixi
            mXq = mX / ixi
        if xk[0] == 0.0:
            # limits at xi = 0 from the odd imaginary part of the multiplier
            eps = 1e-5
            me, mXe, _, _ = extension_multiplier(params, [eps], rho)
            mq[0] = np.imag(me[0]) / eps
            mXq[0] = np.imag(mXe[0]) / eps
        U = uh[keep][:, None]
        S = sh[keep][:, None]
        Vh[:, keep] = (U * m + S * mq).T
        Vth[:, keep] = (ixi * U * m + S * m).T
        Vrh[:, keep] = (U * mX + S * mXq).T
    dX = _dx_drho(rho)
    base = lev_l + jump * sig
    V = np.fft.irfft(Vh, n=n, axis=1) + base[None, :]
    Vt = np.fft.irfft(Vth, n=n, axis=1)
    Vrho = np.fft.irfft(Vrh, n=n, axis=1) * dX[:, None]
    window = slice(offset, offset + v.n)
    return ExtensionField(params, v.t, rho, w, rs, drs * dX, V[:, window], Vt[:, window],
                          Vrho[:, window], window)


# ------------------------------------------------------------ Hamiltonian

def hamiltonian_trace(params: ProblemParams, field: ExtensionField, v: GridFunction,
                      weights: str = "exact") -> GridFunction:
    """H(t) = H1(t) + H2(t) on the grid of v.

    weights="exact" uses the volume density of the metric (rho*)^2 g+ in the
    coordinates (rho*, t); weights="reduced" uses the bare factors e*_1, e*_2, which
    drop (rho*/rho)^(N-1) and d rho / d rho*.
    """
    p = params.require_p()
    g = params.gamma
    A = sy.A_constant(params)
    dt = sy.d_tilde_gamma(g)
    vv = v.values
    H1 = (A / dt) * (-0.5 * vv ** 2 + vv ** (p + 1) / (p + 1))
    radial, temporal = energy_densities(field, weights)
    H2 = 0.5 * (-(field.weights @ (radial[:, None] * field.Vrho ** 2))
                + field.weights @ (temporal[:, None] * field.Vt ** 2))
    return v.with_values(H1 + H2)


def energy_densities(field: ExtensionField, weights: str = "exact"):
    """Per-node factors multiplying (dV/d rho)^2 and (dV/dt)^2 in the rho integral."""
    r = field.rho
    N, g = field.params.N, field.params.gamma
    rs = field.rho_star
    k1 = (1 + r ** 2 / 4) * (1 - r ** 2 / 4) ** (N - 1)
    k2 = (1 - r ** 2 / 4) ** (N - 1) / (1 + r ** 2 / 4)
    base = rs ** (1 - 2 * g)
    if weights == "exact":
        lam = (rs / r) ** (N - 1)
        return base * lam * k1, base * lam * k2
    if weights == "reduced":
        # d rho* = rho*' d rho and d/d rho* = (1/rho*') d/d rho
        drs = field.drho_star
        return base * k1 / drs, base * k2 * drs
    raise ValueError(f"unknown weights {weights!r}")


def hamiltonian_derivative(params: ProblemParams, field: ExtensionField,
                           weights: str = "exact") -> np.ndarray:
    """Right-hand side -2 Q0 int (rho*)^(1-2g) e*_2 (d_t V*)^2 d rho* of the monotonicity law."""
    _, temporal = energy_densities(field, weights)
    return -2 * sy.q0(params) * (field.weights @ (temporal[:, None] * field.Vt ** 2))


def neumann_trace(params: ProblemParams, field: ExtensionField, v: GridFunction) -> np.ndarray:
    """-d~ (rho*)^(1-2g) d V*/d rho* + A v at the smallest rho node."""
    j = int(np.argmin(field.rho))
    return (-sy.d_tilde_gamma(params.gamma) * field.neumann[j]
            + sy.A_constant(params) * v.values)


def quadrature_check(params: ProblemParams, v: GridFunction, n_tau: int = 8) -> float:
    """Change of H under doubling of the rho nodes per panel."""
    Ha = hamiltonian_trace(params, extension_field(params, v, n_tau), v).values
    Hb = hamiltonian_trace(params, extension_field(params, v, 2 * n_tau), v).values
    diff = float(np.max(np.abs(Ha - Hb)))
    if not np.isfinite(diff):
        raise QuadratureFailure("Hamiltonian quadrature produced non-finite values")
    return diff
