"""Poles of the resolvent 1/(Theta_m - kappa), residues and indicial roots."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from . import symbols as sy
from .errors import (BeyondFirstUnstableWindow, DegeneratePole, DomainError,
                     MissedPoleError, NonConvergence)
from .symbols import ProblemParams

CONTOUR_POINTS = 4096
NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50


class Axis(str, Enum):
    IMAGINARY = "Imaginary"
    REAL = "Real"
    OFF_AXIS = "OffAxis"


class Regime(str, Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"


class Location(str, Enum):
    ORIGIN = "Origin"
    INFINITY = "Infinity"


@dataclass(frozen=True)
class PoleEntry:
    tau: float
    sigma: float
    residue: complex
    j: int
    axis: Axis

    @property
    def z(self) -> complex:
        return complex(self.tau, self.sigma)

    def mirror_residue(self) -> complex:
        """Residue at -tau + i sigma."""
        return -np.conj(self.residue)


@dataclass(frozen=True)
class PoleTable:
    params: ProblemParams
    mode: int
    kappa: float
    entries: Tuple[PoleEntry, ...]
    regime: Regime
    certified_window: Optional[Tuple[float, float]] = None

    def sigmas(self):
        return np.array([e.sigma for e in self.entries])

    def to_json(self) -> str:
        d = {
            "params": {"N": self.params.N, "gamma": self.params.gamma,
                       "p": self.params.p, "k": self.params.k},
            "mode": self.mode,
            "kappa": self.kappa,
            "regime": self.regime.value,
            "entries": [
                {"tau": e.tau, "sigma": e.sigma,
                 "residue_re": float(np.real(e.residue)),
                 "residue_im": float(np.imag(e.residue)),
                 "j": e.j, "axis": e.axis.value}
                for e in self.entries
            ],
        }
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PoleTable":
        d = json.loads(text)
        pr = d["params"]
        params = ProblemParams(pr["N"], pr["gamma"], pr.get("p"), pr.get("k"))
        entries = tuple(
            PoleEntry(e["tau"], e["sigma"], complex(e["residue_re"], e["residue_im"]),
                      e["j"], Axis(e.get("axis", "Imaginary")))
            for e in d["entries"]
        )
        return cls(params, d["mode"], d["kappa"], entries, Regime(d.get("regime", "Stable")))


@dataclass(frozen=True)
class IndicialReport:
    gamma_minus: complex
    gamma_plus: complex
    location: Location
    mode: int


# ------------------------------------------------------------------ helpers

def _f_imag(params, mode, sigma):
    """Theta_m(i sigma), real valued."""
    return float(np.real(sy.theta(params, mode, 1j * sigma)))


def _g(params, mode, kappa, z):
    return sy.theta(params, mode, z) - kappa


def residue_at(params: ProblemParams, mode: int, kappa: float, pole) -> complex:
    """Residue of 1/(Theta_m - kappa) at a simple zero."""
    z = pole.z if isinstance(pole, PoleEntry) else complex(pole)
    d = complex(sy.theta_prime(params, mode, z))
    if abs(d) < 1e-12:
        raise DegeneratePole(f"|g'| = {abs(d):.3e} at z = {z}")
    return 1.0 / d


def _newton(params, mode, kappa, z0, tol=NEWTON_TOL, maxit=NEWTON_MAXIT):
    z = complex(z0)
    for _ in range(maxit):
        g = complex(_g(params, mode, kappa, z))
        d = complex(sy.theta_prime(params, mode, z))
        if d == 0:
            break
        step = g / d
        z -= step
        if abs(step) <= tol * max(1.0, abs(z)):
            return z
    raise NonConvergence(f"Newton failed from {z0}")


def _polish_imag(params, mode, kappa, lo, hi):
    fa = _f_imag(params, mode, lo) - kappa
    fb = _f_imag(params, mode, hi) - kappa
    if fa * fb > 0:
        raise MissedPoleError(f"no sign change on ({lo}, {hi})")
    s = brentq(lambda x: _f_imag(params, mode, x) - kappa, lo, hi,
               xtol=1e-15, rtol=8.9e-16, maxiter=500)
    return s


def _imag_axis_root(params, mode, kappa, j):
    """j-th root of Theta_m(i sigma) = kappa on the positive imaginary axis (kappa > 0)."""
    hp = sy.half_params(params, mode)
    B, g = hp.B_m, params.gamma
    if j == 0:
        return _polish_imag(params, mode, kappa, 0.0, 2 * B * (1 - 1e-14))
    # Theta(i sigma) runs from +inf down to 0 between the numerator pole and the next zero
    lo = 2 * B + 2 * (j - 1) + 2 * g
    hi = 2 * B + 2 * j
    eps = 1e-12 * hi
    return _polish_imag(params, mode, kappa, lo + 1e-8, hi - eps)


BATCH_CUTOFF = 20


def imag_axis_roots_batch(params, mode, kappa, js, maxit=60):
    """Roots for many j >= 1 at once: vectorised Newton from the zeros 2(B + j).

    The seed sits where Theta vanishes; the root moves down by O(j^(-2 gamma)).
    Any index whose iterate leaves its bracket is redone by bracketing.
    """
    hp = sy.half_params(params, mode)
    B, g = hp.B_m, params.gamma
    js = np.asarray(js, dtype=float)
    lo = 2 * B + 2 * (js - 1) + 2 * g
    hi = 2 * B + 2 * js
    s = hi.copy()
    done = np.zeros(s.shape, dtype=bool)
    for _ in range(maxit):
        z = 1j * s
        f = np.real(sy.theta(params, mode, z)) - kappa
        fp = np.real(1j * sy.theta_prime(params, mode, z))
        step = f / fp
        s_new = s - step
        bad = (s_new <= lo) | (s_new > hi) | ~np.isfinite(s_new)
        s = np.where(bad, 0.5 * (lo + hi), s_new)
        done = ~bad & (np.abs(step) <= 1e-15 * s)
        if np.all(done):
            break
    for i in np.nonzero(~done)[0]:
        s[i] = _imag_axis_root(params, mode, kappa, int(js[i]))
    return s


def _real_axis_root(params, mode, kappa):
    """Real root of Theta_m(xi) = kappa (Theta increasing on xi > 0)."""
    f = lambda x: float(np.real(sy.theta(params, mode, x))) - kappa
    hi = 1.0
    while f(hi) < 0:
        hi *= 2
        if hi > 1e8:
            raise NonConvergence("real root bracket not found")
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=500)


# ------------------------------------------------------- argument principle

def _segment(a, b, n):
    s = np.linspace(0.0, 1.0, n + 1)
    return a + (b - a) * s, (b - a)


def contour_integral(params, mode, kappa, corners, n=CONTOUR_POINTS, moment=0):
    """(1/2 pi i) times the closed-polygon integral of z^moment g'/g, trapezoid rule."""
    total = 0.0j
    for k in range(len(corners)):
        a, b = corners[k], corners[(k + 1) % len(corners)]
        z, dz = _segment(a, b, n)
        g = _g(params, mode, kappa, z)
        gp = sy.theta_prime(params, mode, z)
        h = gp / g * (z ** moment) * dz
        total += (h[1:-1].sum() + 0.5 * (h[0] + h[-1])) / n
    return total / (2j * math.pi)


def rect_corners(x0, x1, y0, y1):
    return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]


def winding_number(params, mode, kappa, center, radius, n=256):
    """Winding of g around a small circle: zeros minus poles inside."""
    th = 2 * math.pi * np.arange(n) / n
    z = center + radius * np.exp(1j * th)
    g = _g(params, mode, kappa, z)
    gp = sy.theta_prime(params, mode, z)
    val = np.sum(gp / g * 1j * radius * np.exp(1j * th)) * (2 * math.pi / n)
    return val / (2j * math.pi)


def _numerator_poles_in(params, mode, y0, y1):
    A = sy.half_params(params, mode).A_m
    count = 0
    n = 0
    while 2 * (A + n) < y1:
        if 2 * (A + n) > y0:
            count += 1
        n += 1
    n = 0
    while -2 * (A + n) > y0:
        if -2 * (A + n) < y1:
            count += 1
        n += 1
    return count


def count_zeros(params, mode, kappa, x0, x1, y0, y1, n=CONTOUR_POINTS):
    w = contour_integral(params, mode, kappa, rect_corners(x0, x1, y0, y1), n)
    if abs(w.real - round(w.real)) > 0.05 or abs(w.imag) > 0.05:
        if n < 8 * CONTOUR_POINTS:
            return count_zeros(params, mode, kappa, x0, x1, y0, y1, 2 * n)
        raise NonConvergence(f"winding {w} not near an integer")
    return int(round(w.real)) + _numerator_poles_in(params, mode, y0, y1)


def _search_off_axis(params, mode, kappa, x0, x1, y0, y1, depth=0, n=512):
    """Recursively isolate zeros of g in a rectangle; returns located points."""
    c = count_zeros(params, mode, kappa, x0, x1, y0, y1, n)
    if c == 0:
        return []
    if c == 1 and max(x1 - x0, y1 - y0) < 0.5 or depth > 12:
        zc = contour_integral(params, mode, kappa, rect_corners(x0, x1, y0, y1), n, moment=1)
        zc = zc - (0 if c else 0)
        return [_newton(params, mode, kappa, zc / max(c, 1))]
    if x1 - x0 >= y1 - y0:
        xm = 0.5 * (x0 + x1)
        return (_search_off_axis(params, mode, kappa, x0, xm, y0, y1, depth + 1, n)
                + _search_off_axis(params, mode, kappa, xm, x1, y0, y1, depth + 1, n))
    ym = 0.5 * (y0 + y1)
    return (_search_off_axis(params, mode, kappa, x0, x1, y0, ym, depth + 1, n)
            + _search_off_axis(params, mode, kappa, x0, x1, ym, y1, depth + 1, n))


# ------------------------------------------------------------------- public

def find_poles(params: ProblemParams, mode: int, kappa: float, count: int,
               certify: bool = True) -> PoleTable:
    """First `count` zeros of Theta_m - kappa in the closed upper half plane.

    Imaginary-axis zeros are bracketed between consecutive numerator poles
    and zeros of Theta; the real zero (kappa > Theta_m(0)) is bracketed on
    the real axis. With certify=True an argument-principle count over a
    rectangle containing the located points must match.
    """
    if kappa < 0:
        raise DomainError("kappa must be non-negative")
    if count < 1:
        raise DomainError("count must be positive")
    hp = sy.half_params(params, mode)
    B = hp.B_m
    theta0 = float(np.real(sy.theta(params, mode, 0.0)))
    entries: List[PoleEntry] = []
    regime = Regime.STABLE
    if kappa == 0:
        ss = 2 * (B + np.arange(count))
        rr = 1.0 / sy.theta_prime(params, mode, 1j * ss)
        entries.extend(PoleEntry(0.0, float(s), complex(r), j, Axis.IMAGINARY)
                       for j, (s, r) in enumerate(zip(ss, rr)))
    else:
        start = 0
        if kappa > theta0:
            regime = Regime.UNSTABLE
            tau0 = _real_axis_root(params, mode, kappa)
            entries.append(PoleEntry(tau0, 0.0, residue_at(params, mode, kappa, tau0), 0, Axis.REAL))
            start = 1
        elif kappa == theta0:
            raise DegeneratePole("kappa equals Theta_m(0): double zero at the origin")
        for j in range(start, min(count, BATCH_CUTOFF)):
            s = _imag_axis_root(params, mode, kappa, j)
            z = _newton(params, mode, kappa, 1j * s)
            s = z.imag if abs(z.real) < 1e-9 * max(1, abs(z)) else s
            entries.append(PoleEntry(0.0, s, residue_at(params, mode, kappa, 1j * s), j, Axis.IMAGINARY))
        if count > BATCH_CUTOFF:
            js = np.arange(max(start, BATCH_CUTOFF), count)
            ss = imag_axis_roots_batch(params, mode, kappa, js)
            rr = 1.0 / sy.theta_prime(params, mode, 1j * ss)
            entries.extend(PoleEntry(0.0, float(s), complex(r), int(j), Axis.IMAGINARY)
                           for s, r, j in zip(ss, rr, js))
    table = PoleTable(params, int(mode), float(kappa), tuple(entries), regime)
    if certify:
        table = certify_table(table)
    return table


def _entry_multiplicity(e: PoleEntry) -> int:
    return 2 if e.tau > 0 else 1


def certify_table(table: PoleTable, T: Optional[float] = None) -> PoleTable:
    """Check that an argument-principle count agrees with the located zeros.

    The rectangle is [-T, T] x [-eta, Sigma] with Sigma placed where
    Theta(i sigma) - kappa < 0 just above the last imaginary-axis entry.
    Off-axis zeros found by subdivision are appended; a real zero beyond
    the first pair raises BeyondFirstUnstableWindow.
    """
    params, mode, kappa = table.params, table.mode, table.kappa
    hp = sy.half_params(params, mode)
    B, g = hp.B_m, params.gamma
    imag = [e for e in table.entries if e.axis == Axis.IMAGINARY]
    jmax = max((e.j for e in imag), default=0)
    Sigma = 2 * B + 2 * jmax + g
    positive = [e.sigma for e in table.entries if e.sigma > 0]
    eta = min(0.25, 0.5 * min(positive)) if positive else 0.25
    R0 = 2 * (B + 5)
    taus = [e.tau for e in table.entries if e.tau > 0]
    if T is None:
        T = max(R0, 2 * max(taus)) if taus else R0
    found = count_zeros(params, mode, kappa, -T, T, -eta, Sigma)
    expected = sum(_entry_multiplicity(e) for e in table.entries)
    if found == expected:
        return PoleTable(params, mode, kappa, table.entries, table.regime, (T, Sigma))
    if found < expected:
        raise MissedPoleError(f"argument principle counts {found}, located {expected}")
    delta = 1e-3
    extra = _search_off_axis(params, mode, kappa, delta, T, -eta, Sigma)
    new = list(table.entries)
    for z in extra:
        if abs(z.imag) < 1e-9:
            raise BeyondFirstUnstableWindow(f"additional real zero at {z.real}")
        new.append(PoleEntry(abs(z.real), z.imag, residue_at(params, mode, kappa, complex(abs(z.real), z.imag)),
                             -1, Axis.OFF_AXIS))
    new.sort(key=lambda e: (e.sigma, e.tau))
    new = [PoleEntry(e.tau, e.sigma, e.residue, i, e.axis) for i, e in enumerate(new)]
    if sum(_entry_multiplicity(e) for e in new) != found:
        raise MissedPoleError(f"argument principle counts {found}, located {len(new)} after search")
    return PoleTable(params, mode, kappa, tuple(new), table.regime, (T, Sigma))


def indicial_roots(params: ProblemParams, mode: int, location) -> IndicialReport:
    """Indicial roots at the origin (kappa = p A) or at infinity (closed form)."""
    location = Location(location)
    N, g = params.N, params.gamma
    mu = sy.ModeIndex(int(mode), N).mu
    centre = -(N - 2 * g) / 2
    if location == Location.INFINITY:
        w = 1 - g + math.sqrt((N / 2 - 1) ** 2 + mu)
        return IndicialReport(complex(centre - w), complex(centre + w), location, int(mode))
    kappa = params.require_p() * sy.A_constant(params)
    table = find_poles(params, mode, kappa, 1, certify=False)
    e = table.entries[0]
    if e.axis == Axis.REAL:
        return IndicialReport(complex(centre, -e.tau), complex(centre, e.tau), location, int(mode))
    return IndicialReport(complex(centre - e.sigma), complex(centre + e.sigma), location, int(mode))
