"""Cylinder symbols Theta_m, the conjugate symbol and the named constants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import specialfn as sf
from .errors import BracketError, DomainError, PoleError

POLE_PROXIMITY = 1e-10


@dataclass(frozen=True)
class ProblemParams:
    N: int
    gamma: float
    p: Optional[float] = None
    k: Optional[int] = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N}")
        if not (0.0 < self.gamma < 1.0):
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.N <= 2 * self.gamma:
            raise DomainError("need N > 2 gamma")
        if self.p is not None and not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if self.k is not None:
            if self.k < 0 or not self.k < (self.N + self.k - 2 * self.gamma) / 2:
                raise DomainError(f"k={self.k} not admissible")

    def require_p(self) -> float:
        """p, checked against the admissible range N/(N-2g) < p <= (N+2g)/(N-2g)."""
        if self.p is None:
            raise DomainError("this computation needs p")
        lo, hi = p_range(self.N, self.gamma)
        if not (lo < self.p <= hi * (1 + 1e-14)):
            raise DomainError(f"p={self.p} outside ({lo}, {hi}]")
        return float(self.p)

    @property
    def critical_p(self) -> float:
        return (self.N + 2 * self.gamma) / (self.N - 2 * self.gamma)


@dataclass(frozen=True)
class ModeIndex:
    """Spherical-harmonic degree l with eigenvalue mu = l(l + N - 2)."""
    degree: int
    N: int

    def __post_init__(self):
        if self.degree < 0:
            raise DomainError("mode degree must be non-negative")

    @property
    def mu(self) -> float:
        return float(self.degree * (self.degree + self.N - 2))


@dataclass(frozen=True)
class SymbolHalfParams:
    A_m: float
    B_m: float


def p_range(N, gamma):
    return N / (N - 2 * gamma), (N + 2 * gamma) / (N - 2 * gamma)


def harmonic_dimension(degree: int, N: int) -> int:
    """Dimension of degree-l spherical harmonics on S^{N-1}."""
    if degree == 0:
        return 1
    top = math.comb(degree + N - 1, N - 1)
    low = math.comb(degree + N - 3, N - 1) if degree >= 2 else 0
    return top - low


def degree_from_multiplicity_index(m: int, N: int) -> int:
    """Map an eigenvalue index counted with multiplicity (m = 0, 1, ...) to its degree."""
    if m < 0:
        raise DomainError("index must be non-negative")
    deg, seen = 0, 0
    while True:
        seen += harmonic_dimension(deg, N)
        if m < seen:
            return deg
        deg += 1


def _mode(params: ProblemParams, mode) -> ModeIndex:
    if isinstance(mode, ModeIndex):
        return mode
    return ModeIndex(int(mode), params.N)


def half_params(params: ProblemParams, mode) -> SymbolHalfParams:
    m = _mode(params, mode)
    g = params.gamma
    A = 0.5 + g / 2 + 0.5 * math.sqrt((params.N / 2 - 1) ** 2 + m.mu)
    return SymbolHalfParams(A, A - g)


def _args(params, mode, z):
    hp = half_params(params, mode)
    z = np.asarray(z, dtype=complex)
    h = 0.5j * z
    return hp.A_m, hp.B_m, h, z


def _check_numerator(A, h):
    for w in (A + h, A - h):
        n = np.round(w.real)
        hit = (n <= 0) & (np.abs(w - n) < POLE_PROXIMITY)
        if np.any(hit):
            raise PoleError("z at a pole of Theta (numerator Gamma pole)")


def _den_zero(w, tol=1e-13):
    n = np.round(w.real)
    return (n <= 0) & (np.abs(w - n) < tol)


def theta(params: ProblemParams, mode, z):
    """Theta_m(z), vectorised in z; exactly zero at denominator Gamma poles."""
    A, B, h, z = _args(params, mode, z)
    _check_numerator(A, h)
    zz = np.atleast_1d(z)
    hh = np.atleast_1d(h)
    zero = _den_zero(B + hh) | _den_zero(B - hh)
    out = np.zeros(zz.shape, dtype=complex)
    ok = ~zero
    if np.any(ok):
        hk = hh[ok]
        lg = (sf._ln_gamma_raw(A + hk) + sf._ln_gamma_raw(A - hk)
              - sf._ln_gamma_raw(B + hk) - sf._ln_gamma_raw(B - hk))
        out[ok] = 2.0 ** (2 * params.gamma) * np.exp(lg)
    return out if np.ndim(z) else out[0]


def theta_prime(params: ProblemParams, mode, z):
    """d Theta_m / dz, via digamma, with the limit taken at zeros of Theta."""
    A, B, h, z = _args(params, mode, z)
    _check_numerator(A, h)
    zz = np.atleast_1d(z)
    hh = np.atleast_1d(h)
    c = 2.0 ** (2 * params.gamma)
    out = np.empty(zz.shape, dtype=complex)
    zp = _den_zero(B + hh)
    zm = _den_zero(B - hh)
    reg = ~(zp | zm)
    if np.any(reg):
        th = theta(params, mode, zz[reg])
        hr = hh[reg]
        psi = (sf.digamma(A + hr) - sf.digamma(A - hr)
               - sf.digamma(B + hr) + sf.digamma(B - hr))
        out[reg] = th * 0.5j * psi
    for mask, sgn in ((zp & ~zm, 1.0), (zm & ~zp, -1.0)):
        if not np.any(mask):
            continue
        hs = hh[mask]
        w_pole = B + sgn * hs
        n = np.round(w_pole.real).astype(int)
        w_other = B - sgn * hs
        # d/dw [1/Gamma(w)] at w = -n equals (-1)^n n!
        k = -n
        sign = np.where(k % 2 == 1, -1.0, 1.0)
        lg = (sf._ln_gamma_raw(A + hs) + sf._ln_gamma_raw(A - hs)
              - sf._ln_gamma_raw(w_other) + sf._ln_gamma_raw(k + 1.0))
        drg = sign
        out[mask] = c * np.exp(lg) * drg * (sgn * 0.5j)
    if np.any(zp & zm):
        out[zp & zm] = 0.0
    return out if np.ndim(z) else out[0]


def q0(params: ProblemParams) -> float:
    p = params.require_p()
    return -(params.N - 2 * params.gamma) / 2 + 2 * params.gamma / (p - 1)


def theta_tilde(params: ProblemParams, mode, xi):
    """Conjugate symbol: Theta_m evaluated at xi - i Q0."""
    return theta(params, mode, np.asarray(xi, dtype=complex) - 1j * q0(params))


def theta_tilde_direct(params: ProblemParams, mode, xi):
    """Conjugate symbol from its own Gamma quotient (independent of theta)."""
    hp = half_params(params, mode)
    s = 0.5 * (q0(params) + 1j * np.asarray(xi, dtype=complex))
    num = sf.ln_gamma(hp.A_m + s) + sf.ln_gamma(hp.A_m - s)
    den = sf.ln_gamma(hp.B_m + s) + sf.ln_gamma(hp.B_m - s)
    return 2.0 ** (2 * params.gamma) * np.exp(num - den)


def hardy_constant(N, gamma) -> float:
    lg = 2 * (math.lgamma((N + 2 * gamma) / 4) - math.lgamma((N - 2 * gamma) / 4))
    return 2.0 ** (2 * gamma) * math.exp(lg)


def lambda_of_alpha(N, gamma, alpha) -> float:
    a1 = (N + 2 * gamma + 2 * alpha) / 4
    a2 = (N + 2 * gamma - 2 * alpha) / 4
    b1 = (N - 2 * gamma - 2 * alpha) / 4
    b2 = (N - 2 * gamma + 2 * alpha) / 4
    val = sf.gamma(a1) * sf.gamma(a2) * sf.rgamma(b1) * sf.rgamma(b2)
    return float((2.0 ** (2 * gamma) * val).real)


def A_constant(params: ProblemParams) -> float:
    p = params.require_p()
    N, g = params.N, params.gamma
    return lambda_of_alpha(N, g, (N - 2 * g) / 2 - 2 * g / (p - 1))


def d_gamma(gamma) -> float:
    return 2.0 ** (2 * gamma) * math.gamma(gamma) / math.gamma(-gamma)


def d_tilde_gamma(gamma) -> float:
    return -d_gamma(gamma) / (2 * gamma)


def _p_residual(N, gamma, p):
    return p * A_constant(ProblemParams(N, gamma, p)) - hardy_constant(N, gamma)


def p_one(N, gamma, tol=1e-12) -> float:
    """Stability threshold: the root of p A(p) = Lambda inside the admissible range."""
    lo, hi = p_range(N, gamma)
    a = lo * (1 + 1e-12)
    b = hi
    fa, fb = _p_residual(N, gamma, a), _p_residual(N, gamma, b)
    if fa * fb > 0:
        raise BracketError(f"no sign change of pA(p) - Lambda on ({lo}, {hi})")
    while b - a > tol * max(1.0, abs(a)):
        m = 0.5 * (a + b)
        fm = _p_residual(N, gamma, m)
        if fa * fm <= 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)
