"""Complex special functions: log-Gamma, Gamma, digamma, Beta, Gauss 2F1.

All functions accept scalars or numpy arrays and broadcast.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergence, ParameterDegeneracy, PoleError

_LANCZOS_G = 7.0
_LANCZOS_C = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)
POLE_TOL = 1e-12


@dataclass(frozen=True)
class SeriesControl:
    abs_tol: float = 1e-14
    rel_tol: float = 1e-12
    max_terms: int = 10_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.max_terms >= 1):
            raise DomainError("SeriesControl needs abs_tol > 0, rel_tol > 0, max_terms >= 1")


DEFAULT_CONTROL = SeriesControl()


def _as_complex(z):
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("non-finite argument")
    return z


def _near_nonpositive_integer(z, tol=POLE_TOL):
    re = z.real
    n = np.round(re)
    return (n <= 0) & (np.abs(re - n) < tol) & (np.abs(z.imag) < tol)


def _check_poles(z):
    if np.any(_near_nonpositive_integer(z)):
        raise PoleError("argument at a non-positive integer")


def _out(v, like):
    return v if np.ndim(like) else v[()]


def _lanczos_right(z):
    # valid for Re z >= 0.5
    w = z - 1.0
    acc = np.full_like(w, _LANCZOS_C[0])
    for k in range(1, 9):
        acc = acc + _LANCZOS_C[k] / (w + k)
    t = w + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (w + 0.5) * np.log(t) - t + np.log(acc)


def _log_sinpi_upper(z):
    # log sin(pi z) continuous on Im z >= 0, overflow free
    e = np.exp(2j * np.pi * z)
    return np.log(0.5j) - 1j * np.pi * z + np.log1p(-e)


def _ln_gamma_raw(z):
    out = np.empty_like(z)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lanczos_right(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        upper = zl.imag >= 0
        zu = np.where(upper, zl, np.conj(zl))
        val = _LOG_PI - _log_sinpi_upper(zu) - _lanczos_right(1.0 - zu)
        # the reflected form differs from the principal branch by a constant
        val = val + _UPPER_SHIFT
        out[left] = np.where(upper, val, np.conj(val))
    return out


def _compute_upper_shift():
    z = np.array([0.25 + 1.0j])
    direct = _lanczos_right(z)[0]
    refl = (_LOG_PI - _log_sinpi_upper(z) - _lanczos_right(1.0 - z))[0]
    k = round((direct - refl).imag / (2 * math.pi))
    return 2j * math.pi * k


_UPPER_SHIFT = _compute_upper_shift()


def ln_gamma(z):
    """Principal branch of log Gamma (continuous off the negative real axis)."""
    z = _as_complex(z)
    _check_poles(z)
    zz = np.atleast_1d(z)
    return _out(_ln_gamma_raw(zz).reshape(z.shape), z)


def gamma(z):
    return np.exp(ln_gamma(z))


def rgamma(z):
    """1/Gamma(z), zero at the poles of Gamma."""
    z = np.atleast_1d(_as_complex(z))
    poles = _near_nonpositive_integer(z)
    out = np.zeros_like(z)
    if np.any(~poles):
        out[~poles] = np.exp(-_ln_gamma_raw(z[~poles]))
    return out if out.size > 1 else out[0]


def beta(a, b):
    return np.exp(ln_gamma(a) + ln_gamma(b) - ln_gamma(np.asarray(a) + np.asarray(b)))


_PSI_ASYM = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)


def digamma(z):
    """psi(z) by reflection, upward recurrence to |z| >= 10 and an asymptotic tail."""
    z0 = _as_complex(z)
    _check_poles(z0)
    z = np.atleast_1d(z0).copy()
    acc = np.zeros_like(z)
    left = z.real < 0.5
    if np.any(left):
        acc[left] = -np.pi / np.tan(np.pi * z[left])
        z[left] = 1.0 - z[left]
    small = np.abs(z) < 10.0
    while np.any(small):
        acc[small] -= 1.0 / z[small]
        z[small] += 1.0
        small = np.abs(z) < 10.0
    inv2 = 1.0 / (z * z)
    tail = np.zeros_like(z)
    for c in reversed(_PSI_ASYM):
        tail = (tail + c) * inv2
    res = np.log(z) - 0.5 / z - tail + acc
    return _out(res.reshape(z0.shape), z0)


def gamma_residue(j: int) -> float:
    """Residue of Gamma at -j."""
    if j < 0:
        raise DomainError("j must be non-negative")
    sign = -1.0 if j % 2 else 1.0
    if j <= 170:
        return sign / math.factorial(j)
    return sign * math.exp(-math.lgamma(j + 1))


# ---------------------------------------------------------------- 2F1

def _series(a, b, c, w, ctl):
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    term = np.ones_like(w)
    total = np.ones_like(w)
    prev_small = np.zeros(w.shape, dtype=bool)
    for n in range(ctl.max_terms):
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * w
        total = total + term
        small = np.abs(term) <= np.maximum(ctl.abs_tol, ctl.rel_tol * np.abs(total))
        # two consecutive small terms guard against accidental near-zeros
        if np.all(small & prev_small):
            return total
        prev_small = small
    raise NonConvergence(f"2F1 series did not converge in {ctl.max_terms} terms")


def _is_nonpos_int(x, tol=1e-14):
    x = complex(x)
    return abs(x.imag) < tol and x.real <= tol and abs(x.real - round(x.real)) < tol


def _connection(a, b, c, z, ctl, w=None):
    s = c - a - b
    if abs(s.imag) < 1e-10 and abs(s.real - round(s.real)) < 1e-10:
        raise ParameterDegeneracy(f"c-a-b = {s} is an integer (logarithmic case)")
    if w is None:
        w = 1.0 - z
    g1 = np.exp(ln_gamma(c) + ln_gamma(s)) * rgamma(c - a) * rgamma(c - b)
    g2 = np.exp(ln_gamma(c) + ln_gamma(-s)) * rgamma(a) * rgamma(b)
    out = np.zeros_like(w)
    if g1 != 0:
        out = out + g1 * _series(a, b, 1.0 - s, w, ctl)
    if g2 != 0:
        out = out + g2 * np.exp(s * np.log(w)) * _series(c - a, c - b, 1.0 + s, w, ctl)
    return out


def hyp2f1(a, b, c, z, ctl: SeriesControl = DEFAULT_CONTROL):
    """Gauss hypergeometric function 2F1(a, b; c; z).

    Scalars a, b, c; z may be an array. Uses the power series directly,
    after a Pfaff transformation, or through the z -> 1 - z connection
    formula, whichever gives the smallest series argument (at most 0.95).
    """
    a, b, c = complex(a), complex(b), complex(c)
    if _is_nonpos_int(c):
        raise PoleError("c is a non-positive integer")
    z0 = _as_complex(z)
    zz = np.atleast_1d(z0)
    out = np.empty_like(zz)
    poly = _is_nonpos_int(a) or _is_nonpos_int(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        m_direct = np.abs(zz)
        m_pfaff = np.abs(zz / (zz - 1.0))
        m_conn = np.abs(1.0 - zz)
        m_conn_pfaff = np.abs(1.0 / (1.0 - zz))
    m_pfaff = np.where(np.isfinite(m_pfaff), m_pfaff, np.inf)
    m_conn_pfaff = np.where(np.isfinite(m_conn_pfaff), m_conn_pfaff, np.inf)
    choice = np.argmin(np.stack([m_direct, m_pfaff, m_conn, m_conn_pfaff]), axis=0)
    best = np.min(np.stack([m_direct, m_pfaff, m_conn, m_conn_pfaff]), axis=0)
    if poly:
        choice = np.zeros_like(choice)
    elif np.any(best > 0.95):
        raise DomainError("2F1 argument outside the supported region")
    # the direct series is preferred whenever it is already within 0.5
    choice = np.where(m_direct <= 0.5, 0, choice)
    for k in range(4):
        sel = choice == k
        if not np.any(sel):
            continue
        zs = zz[sel]
        if k == 0:
            val = _series(a, b, c, zs, ctl)
        elif k == 1:
            val = np.exp(-a * np.log(1.0 - zs)) * _series(a, c - b, c, zs / (zs - 1.0), ctl)
        elif k == 2:
            val = _connection(a, b, c, zs, ctl)
        else:
            x = zs / (zs - 1.0)
            val = np.exp(-a * np.log(1.0 - zs)) * _connection(a, c - b, c, x, ctl)
        out[sel] = val
    return _out(out.reshape(z0.shape), z0)


def hyp2f1_near_one(a, b, c, w, ctl: SeriesControl = DEFAULT_CONTROL):
    """2F1(a, b; c; 1 - w) for |w| <= 0.5 with w supplied exactly (no cancellation in 1 - z)."""
    a, b, c = complex(a), complex(b), complex(c)
    w0 = _as_complex(w)
    ww = np.atleast_1d(w0)
    if np.any(np.abs(ww) > 0.5):
        raise DomainError("hyp2f1_near_one needs |w| <= 0.5")
    val = _connection(a, b, c, 1.0 - ww, ctl, w=ww)
    return _out(val.reshape(w0.shape), w0)
