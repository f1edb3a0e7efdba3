"""Green's functions of Theta_m - kappa as residue series, and their use.

Normalisation: G(t) is the inverse Fourier integral of 1/(Theta_m - kappa)
without a 1/(2 pi) factor, so the particular solution of the mode equation
with right-hand side h is w = (1/2 pi) * (G convolved with h).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from . import symbols as sy
from .errors import DecayMismatch, TruncationError, WindowError
from .grid import GridFunction
from .indicial import Axis, PoleTable, Regime, find_poles
from .symbols import ProblemParams

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class GreenSeries:
    poles: PoleTable
    sigma: np.ndarray
    tau: np.ndarray
    d: np.ndarray
    d_prime: np.ndarray
    window: int = -1
    t_min: float = 0.05
    tau0: float = 0.0
    d0_unstable: float = 0.0

    @property
    def params(self) -> ProblemParams:
        return self.poles.params

    @property
    def mode(self) -> int:
        return self.poles.mode

    @property
    def kappa(self) -> float:
        return self.poles.kappa

    @property
    def regime(self) -> Regime:
        return self.poles.regime

    @property
    def truncation(self) -> int:
        return int(self.sigma.size)

    def coeffs(self):
        return list(zip(self.sigma, self.tau, self.d, self.d_prime))

    def tail_bound(self, t: float) -> float:
        """Bound on the discarded terms at |t| (geometric in the pole spacing 2)."""
        t = abs(t)
        if t == 0:
            return math.inf
        last = abs(self.d[-1]) + abs(self.d_prime[-1])
        return last * math.exp(-self.sigma[-1] * t) / (-math.expm1(-2 * t))

    def to_json(self) -> str:
        return json.dumps({
            "params": {"N": self.params.N, "gamma": self.params.gamma, "p": self.params.p},
            "mode": self.mode, "kappa": self.kappa, "regime": self.regime.value,
            "window": self.window, "t_min": self.t_min,
            "tau0": self.tau0, "d0_unstable": self.d0_unstable,
            "coeffs": [{"sigma": float(s), "tau": float(t), "d": float(a), "d_prime": float(b)}
                       for s, t, a, b in self.coeffs()],
        }, indent=2)


def _coefficients(table: PoleTable):
    sig, tau, d, dp = [], [], [], []
    tau0, d0u = 0.0, 0.0
    for e in table.entries:
        c = complex(e.residue)
        if e.axis == Axis.REAL:
            # residues at +-tau0 are r and -r; the advanced contour leaves
            # 4 pi r sin(tau0 t) on t < 0
            tau0 = e.tau
            d0u = 4 * math.pi * c.real
            continue
        if e.tau == 0:
            sig.append(e.sigma)
            tau.append(0.0)
            d.append((2j * math.pi * c).real)
            dp.append(0.0)
        else:
            sig.append(e.sigma)
            tau.append(e.tau)
            d.append(-4 * math.pi * c.imag)
            dp.append(-4 * math.pi * c.real)
    return np.array(sig), np.array(tau), np.array(d), np.array(dp), tau0, d0u


def _count_for(t_min, tol=TAIL_TOL):
    return int(math.ceil((-math.log(tol) + 8.0) / (2 * t_min))) + 30


def green_series(params: ProblemParams, mode: int, kappa: float, t_min: float = 0.05,
                 certify: bool = True) -> GreenSeries:
    """Residue series of G_m, truncated so the tail is below 1e-12 for |t| >= t_min."""
    count = _count_for(t_min)
    table = find_poles(params, mode, kappa, count, certify=False)
    if certify:
        from .indicial import certify_table, PoleTable as _PT
        head = _PT(params, table.mode, table.kappa, table.entries[:min(count, 12)], table.regime)
        certify_table(head)
    sig, tau, d, dp, tau0, d0u = _coefficients(table)
    s = GreenSeries(table, sig, tau, d, dp, -1, t_min, tau0, d0u)
    if s.tail_bound(t_min) > TAIL_TOL:
        raise TruncationError(f"tail bound {s.tail_bound(t_min):.2e} at t={t_min}")
    return s


def green_shifted(params: ProblemParams, mode: int, kappa: float, J: int,
                  t_min: float = 0.05) -> GreenSeries:
    """Series for the contour moved to height between sigma_J and sigma_{J+1}."""
    base = green_series(params, mode, kappa, t_min)
    if J < -1 or J + 1 >= base.truncation:
        raise WindowError(f"window index J={J} out of range")
    return GreenSeries(base.poles, base.sigma, base.tau, base.d, base.d_prime, J,
                       t_min, base.tau0, base.d0_unstable)


def _terms(series: GreenSeries, t, upto: Optional[int] = None):
    """sum_j exp(-sigma_j t)[d_j cos(tau_j t) + d'_j sin(tau_j t)] for t >= 0."""
    sl = slice(0, upto)
    s, ta, d, dp = series.sigma[sl], series.tau[sl], series.d[sl], series.d_prime[sl]
    t = np.asarray(t, dtype=float)[..., None]
    return np.sum(np.exp(-s * t) * (d * np.cos(ta * t) + dp * np.sin(ta * t)), axis=-1)


def _homogeneous(series: GreenSeries, t):
    """Terms j <= J continued to all real t."""
    J = series.window
    if J < 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    sl = slice(0, J + 1)
    s, ta, d, dp = series.sigma[sl], series.tau[sl], series.d[sl], series.d_prime[sl]
    t = np.asarray(t, dtype=float)[..., None]
    return np.sum(np.exp(-s * t) * (d * np.cos(ta * t) + dp * np.sin(ta * t)), axis=-1)


def green_eval(series: GreenSeries, t):
    """G_m(t) from the residue series (even part, shift and unstable term included)."""
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    if np.any(at < series.t_min * (1 - 1e-12)):
        raise TruncationError(f"|t| below {series.t_min}: series tail not controlled")
    out = _terms(series, at)
    if series.d0_unstable:
        out = out + np.where(t < 0, series.d0_unstable * np.sin(series.tau0 * t), 0.0)
    out = out - _homogeneous(series, t)
    return out if out.ndim else float(out)


# ----------------------------------------------------------------- oracles

def green_fourier_oracle(params: ProblemParams, mode: int, kappa: float, t: float,
                         cutoff: float = 200.0) -> float:
    """Direct quadrature of the inverse Fourier integral of 1/(Theta_m - kappa).

    Finite part on [0, cutoff] by QAWO; the remaining tail by QAWF. Stable
    regime only (no real poles).
    """
    f = lambda x: 1.0 / (float(np.real(sy.theta(params, mode, x))) - kappa)
    a, _ = integrate.quad(f, 0.0, cutoff, weight="cos", wvar=t, limit=2000, epsabs=1e-12)
    b, _ = integrate.quad(f, cutoff, np.inf, weight="cos", wvar=t, limlst=200, epsabs=1e-12)
    return 2.0 * (a + b)


# --------------------------------------------------------------- solve_mode

def _bspline_coeffs(values):
    """Cubic B-spline interpolation coefficients with zero end-slopes beyond the grid."""
    n = values.size
    ab = np.zeros((3, n))
    ab[0, 1:] = 1.0 / 6.0
    ab[1, :] = 4.0 / 6.0
    ab[2, :-1] = 1.0 / 6.0
    return solve_banded((1, 1), ab, values)


def _sinc4(x):
    return np.sinc(x / np.pi) ** 4


def _laplace_factor(lam, h):
    """(1/h) * integral of exp(-lam s) against the cubic B-spline of spacing h."""
    x = lam * h
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    val = (np.sinh(xs / 2) / (xs / 2)) ** 4
    return np.where(small, 1.0 + x * x / 6.0, val)


def _weights_series(series: GreenSeries, h: float, ns: np.ndarray):
    """W_n = integral of G(nh - s) B(s) ds for |n| >= 3 from the residue series."""
    lam = -series.sigma + 1j * series.tau
    coef = series.d - 1j * series.d_prime
    out = np.zeros(ns.shape)
    for k, n in enumerate(ns):
        m = abs(n)
        # exp(lam (m - 2) h) ((1 - exp(lam h)) / (lam h))^4 h, overflow free for Re lam < 0
        fac = np.exp(lam * (m - 2) * h) * ((1 - np.exp(lam * h)) / (lam * h)) ** 4 * h
        out[k] = np.real(np.sum(coef * fac))
    return out


def _weights_homogeneous(series: GreenSeries, h: float, ns: np.ndarray):
    J = series.window
    if J < 0:
        return np.zeros(ns.shape)
    lam = -series.sigma[:J + 1] + 1j * series.tau[:J + 1]
    coef = series.d[:J + 1] - 1j * series.d_prime[:J + 1]
    fac = np.exp(np.outer(ns * h, lam)) * _laplace_factor(lam, h) * h
    return np.real(fac @ coef)


def _bspline(x):
    x = np.abs(x)
    return np.where(x < 1, 2 / 3 - x ** 2 + x ** 3 / 2,
                    np.where(x < 2, (2 - x) ** 3 / 6, 0.0))


def _spline_quad(func, n, h, nodes=24):
    """integral of func(nh - s) B(s/h) ds, splitting at the knots and at s = nh."""
    br = sorted(set([-2 * h, -h, 0.0, h, 2 * h] + ([n * h] if abs(n) < 2 else [])))
    x, w = np.polynomial.legendre.leggauss(nodes)
    tot = 0.0
    for a, b in zip(br[:-1], br[1:]):
        s = 0.5 * (b - a) * x + 0.5 * (a + b)
        tot += 0.5 * (b - a) * np.sum(w * func(n * h - s) * _bspline(s / h))
    return tot


def _weights_fourier(series: GreenSeries, h: float, ns):
    """Near weights from the symbol: W_n = integral cos(xi n h) h sinc^4(xi h/2)/(Theta - kappa)."""
    params, mode, kappa = series.params, series.mode, series.kappa
    ns = np.asarray(ns, dtype=float)
    tau0 = series.tau0
    r0 = series.d0_unstable / (4 * math.pi)

    def integrand(x):
        th = float(np.real(sy.theta(params, mode, x)))
        base = 2 * h * np.cos(x * ns * h) * _sinc4(x * h / 2)
        if tau0:
            # remove the simple pole at tau0; its principal value over [0, 2 tau0] vanishes
            val = base / (th - kappa)
            if x < 2 * tau0:
                f0 = 2 * h * np.cos(tau0 * ns * h) * _sinc4(tau0 * h / 2)
                if abs(x - tau0) < 1e-9:
                    return np.zeros_like(ns)
                val = val - f0 * r0 / (x - tau0)
            return val
        return base / (th - kappa)

    cuts = [0.0] + ([2 * tau0] if tau0 else []) + [20.0 / h, 200.0 / h]
    total = np.zeros_like(ns)
    for a, b in zip(cuts[:-1], cuts[1:]):
        pts = [tau0] if tau0 and a < tau0 < b else None
        if pts:
            v1, _ = integrate.quad_vec(integrand, a, tau0, epsabs=1e-13, epsrel=1e-11, limit=400)
            v2, _ = integrate.quad_vec(integrand, tau0, b, epsabs=1e-13, epsrel=1e-11, limit=400)
            total += v1 + v2
        else:
            v, _ = integrate.quad_vec(integrand, a, b, epsabs=1e-13, epsrel=1e-11, limit=400)
            total += v
    # algebraic tail beyond X = 200/h with Theta ~ xi^(2 gamma); the mean of
    # sin^4(u) cos(2 n u) is 3/8, -1/4, 1/16 for |n| = 0, 1, 2
    X = 200.0 / h
    g2 = 2 * params.gamma
    mean = np.array([{0: 3 / 8, 1: -1 / 4, 2: 1 / 16}[int(abs(k))] for k in ns])
    total += 2 * h * 16 / h ** 4 * mean * X ** (-3 - g2) / (3 + g2)
    if tau0:
        # principal value part -> the continuous kernel adds back 2 pi r0 sin(tau0 |t|)
        # and the advanced part 4 pi r0 sin(tau0 t) on t < 0
        extra = np.array([_spline_quad(lambda u: 2 * math.pi * r0 * np.sin(tau0 * np.abs(u))
                                       + np.where(u < 0, 4 * math.pi * r0 * np.sin(tau0 * u), 0.0),
                                       n, h) for n in ns])
        total = total + extra
    total = total - _weights_homogeneous(series, h, ns.astype(int))
    return total


def convolution_weights(series: GreenSeries, h: float, nmax: int):
    """W_n for n = -nmax..nmax against the cubic B-spline basis of spacing h."""
    if 3 * h < series.t_min * (1 - 1e-12):
        raise TruncationError("grid spacing too fine for the series truncation")
    ns = np.arange(-nmax, nmax + 1)
    W = np.zeros(ns.size, dtype=float)
    near = np.abs(ns) <= 2
    W[near] = _weights_fourier(series, h, ns[near])
    far = ~near
    W[far] = _weights_series(series, h, ns[far])
    if series.d0_unstable:
        neg = ns <= -3
        r = series.d0_unstable
        W[neg] += r * np.sin(series.tau0 * ns[neg] * h) * h * _sinc4(series.tau0 * h / 2)
    W[far] -= _weights_homogeneous(series, h, ns[far])
    return ns, W


def _check_hypotheses(series: GreenSeries, h: GridFunction):
    dp, dm = h.decay_plus, h.decay_minus
    if series.window >= 0:
        J = series.window
        if not dp + dm >= 0:
            raise DecayMismatch("shifted form needs delta + delta0 >= 0")
        lo = series.sigma[J]
        hi = series.sigma[J + 1]
        if not (lo < dp < hi) and not math.isinf(dp):
            raise WindowError(f"delta={dp} must lie strictly between sigma_J={lo} and sigma_J+1={hi}")
        return
    if series.regime == Regime.UNSTABLE:
        if not (dp > 0 and dm > 0):
            raise DecayMismatch("unstable regime needs delta > 0 and delta0 > 0")
    elif not (dp > 0 and dm >= 0):
        raise DecayMismatch("stable regime needs delta > 0 and delta0 >= 0")


def _tail_closure(series: GreenSeries, h: GridFunction):
    """Contribution of the declared exponential tails beyond the window."""
    t = h.t
    out = np.zeros_like(t)
    v = h.values
    scale = np.max(np.abs(v)) if v.size else 0.0
    lam = -series.sigma + 1j * series.tau
    coef = series.d - 1j * series.d_prime
    # right tail: h(t') = v[-1] exp(-dp (t' - t_max)), argument t - t' < 0 (mirror terms)
    if not math.isinf(h.decay_plus) and abs(v[-1]) > 1e-14 * scale:
        dp = h.decay_plus
        e = np.exp(np.outer(t - h.t_max, -lam))  # exp(sigma (t - t_max)) * ...
        out += v[-1] * np.real(e @ (coef / (dp - lam)))
        if series.d0_unstable:
            out += v[-1] * series.d0_unstable * np.imag(
                np.exp(1j * series.tau0 * (t - h.t_max)) / (dp + 1j * series.tau0))
    if not math.isinf(h.decay_minus) and abs(v[0]) > 1e-14 * scale:
        dm = h.decay_minus
        e = np.exp(np.outer(t - h.t_min, lam))
        out += v[0] * np.real(e @ (coef / (dm - lam)))
    if series.window >= 0 and (not math.isinf(h.decay_plus) or not math.isinf(h.decay_minus)):
        raise DecayMismatch("tail closure for the shifted form needs compactly supported data")
    return out


def solve_mode(series: GreenSeries, h: GridFunction) -> GridFunction:
    """Particular solution w = (1/2 pi) G * h on the grid of h.

    h is represented by its cubic B-spline interpolant; weights of the
    three innermost cells come from the symbol, the rest from the residue
    series in closed form.
    """
    _check_hypotheses(series, h)
    n = h.n
    c = _bspline_coeffs(h.values)
    _, W = convolution_weights(series, h.h, n + 1)
    # w_i = sum_k c_k W_{i-k}
    full = np.convolve(c, W)  # index i + (n+1) for W centred
    w = full[n + 1: n + 1 + n]
    w = (w + _tail_closure(series, h)) / (2 * math.pi)
    # w inherits the slower of the data tails and the Green's function tails
    if series.regime == Regime.UNSTABLE:
        dp = dm = 0.0
    elif series.window >= 0:
        dp = min(h.decay_plus, float(series.sigma[series.window + 1]))
        dm = -float(series.sigma[series.window])  # subtracted terms grow as t -> -inf
    else:
        dp = min(h.decay_plus, float(series.sigma[0]))
        dm = min(h.decay_minus, float(series.sigma[0]))
    return GridFunction(h.t_min, h.t_max, w, dp, dm)
