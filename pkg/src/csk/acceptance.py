"""Acceptance suite: one check per criterion, shared by the CLI and the test suite."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import greens, hamiltonian, indicial, kernels, odesolve
from . import symbols as sy
from .grid import GridFunction
from .symbols import ProblemParams


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _rel(a, b):
    return abs(a - b) / abs(b)


def c01_hardy_identity():
    rng = np.random.default_rng(20240601)
    cases = [(3, 0.5)]
    while len(cases) < 21:
        N = int(rng.integers(2, 9))
        g = float(rng.uniform(0.02, 0.98))
        if N > 2 * g:
            cases.append((N, g))
    worst = 0.0
    for N, g in cases:
        th = float(np.real(sy.theta(ProblemParams(N, g), 0, 0.0)))
        worst = max(worst, _rel(th, sy.hardy_constant(N, g)))
    closed = _rel(sy.hardy_constant(3, 0.5), 2 / math.pi)
    ok = worst <= 1e-12 and closed <= 1e-12
    return ok, f"max rel err {worst:.1e} over {len(cases)} pairs, (3,1/2) vs 2/pi {closed:.1e}"


NORMALIZATION_TRIPLES = [(3, 0.5, 1.8), (4, 0.3, 1.3), (5, 0.75, 1.6), (3, 0.25, 1.25), (2, 0.4, 2.0)]


def c02_normalization():
    ref = ProblemParams(*NORMALIZATION_TRIPLES[0])
    u = kernels.calibrate_universal(ref)
    worst = 0.0
    for tr in NORMALIZATION_TRIPLES[1:]:
        P = ProblemParams(*tr)
        v = GridFunction(-10, 10, np.ones(801), 0.0, 0.0)
        out = kernels.apply_op(P, 0, v, universal=u).values
        worst = max(worst, float(np.max(np.abs(out - sy.A_constant(P)))) / sy.A_constant(P))
    return worst <= 1e-6, f"universal factor {u:.12f} from {NORMALIZATION_TRIPLES[0]}, max rel err on 4 others {worst:.1e}"


def locate_zero(P: ProblemParams, mode: int, centre: complex, radius: float, n: int = 512):
    """Zero count and zero location inside a circle from the argument principle (trapezoid rule)."""
    th = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * th)
    z = centre + radius * e
    ratio = sy.theta_prime(P, mode, z) / sy.theta(P, mode, z)
    count = np.mean(ratio * radius * e)
    first = np.mean(z * ratio * radius * e)
    return count, first / count


def c03_pole_ladder():
    worst, worst_count = 0.0, 0.0
    for N, g in ((3, 0.5), (4, 0.3)):
        P = ProblemParams(N, g)
        radius = 0.9 * min(g, 1 - g)
        for m in (0, 1, 3):
            B = sy.half_params(P, m).B_m
            tab = indicial.find_poles(P, m, 0.0, 11)
            for j, s in enumerate(tab.sigmas()[:11]):
                want = 2 * (B + j)
                count, z = locate_zero(P, m, 1j * (want + 0.1 * radius), radius)
                worst_count = max(worst_count, abs(count - 1))
                worst = max(worst, abs(z - 1j * want), abs(s - want))
    ok = worst <= 1e-10 and worst_count <= 1e-8
    return ok, f"max |located - 2(B_m + j)| = {worst:.1e}, zero-count error {worst_count:.1e}"


INDICIAL_TRIPLES = [(3, 0.5, 1.55), (3, 0.5, 1.9), (4, 0.75, 1.65), (4, 0.75, 2.0), (5, 0.25, 1.2)]


def c04_indicial_m1():
    worst, regimes = 0.0, []
    for tr in INDICIAL_TRIPLES:
        P = ProblemParams(*tr)
        g, p = tr[1], tr[2]
        rep = indicial.indicial_roots(P, 1, indicial.Location.ORIGIN)
        worst = max(worst, abs(rep.gamma_minus - (-2 * g / (p - 1) - 1)))
        regimes.append("s" if p < sy.p_one(tr[0], g) else "u")
    return worst <= 1e-8, f"max err {worst:.1e}, regimes {''.join(regimes)}"


def c05_stability():
    wrong, total = 0, 0
    for N, g in ((3, 0.5), (4, 0.75)):
        lo, hi = sy.p_range(N, g)
        p1 = sy.p_one(N, g)
        for p in np.linspace(lo, hi, 21)[1:]:
            P = ProblemParams(N, g, float(p))
            tab = indicial.find_poles(P, 0, p * sy.A_constant(P), 1, certify=False)
            complex_root = tab.entries[0].axis == indicial.Axis.REAL
            wrong += complex_root != (p > p1)
            total += 1
    return wrong == 0, f"{wrong} misclassified of {total}"


def c06_green_oracle():
    P = ProblemParams(3, 0.5)
    lam = sy.hardy_constant(3, 0.5)
    worst = 0.0
    for kappa in (0.0, lam / 2):
        s = greens.green_series(P, 0, kappa)
        for t in (0.5, 1.0, 2.0):
            worst = max(worst, abs(greens.green_eval(s, t) - greens.green_fourier_oracle(P, 0, kappa, t)))
    return worst <= 1e-6, f"max abs diff {worst:.1e}"


EXPONENT_TRIPLES = [(3, 0.5, 1.8), (4, 0.75, 1.8)]


def kernel_exponents(P: ProblemParams):
    """Fitted small-|t| slope, t -> -inf rate and t -> +inf rate of K~_0."""
    t = np.geomspace(1e-3, 1e-2, 20)
    small = np.polyfit(np.log(t), np.log(kernels.kernel_k0(P, t)), 1)[0]
    far = np.linspace(8, 14, 20)
    plus = np.polyfit(far, np.log(kernels.kernel_k0(P, far)), 1)[0]
    minus = np.polyfit(far, np.log(kernels.kernel_k0(P, -far)), 1)[0]
    return float(small), float(minus), float(plus)


def c07_kernel_asymptotics():
    worst = 0.0
    for tr in EXPONENT_TRIPLES:
        N, g, p = tr
        got = kernel_exponents(ProblemParams(*tr))
        want = (-(1 + 2 * g), -(N - 2 * g / (p - 1)), -2 * p * g / (p - 1))
        worst = max(worst, max(_rel(a, b) for a, b in zip(got, want)))
    return worst <= 0.03, f"max rel deviation {worst:.2%}"


def residue_ratio(N, g, j=200):
    P = ProblemParams(N, g)
    tab = indicial.find_poles(P, 0, sy.hardy_constant(N, g) / 2, j + 1, certify=False)
    res = tab.entries[j].residue
    return abs(res) * j ** (2 * g) * math.pi / (math.sin(math.pi * g) * math.exp(2 * g))


def c08_residue_asymptotics():
    r = residue_ratio(3, 0.5)
    return 0.9 <= r <= 1.1, f"normalized residue at j=200 is {r:.4f} (target [0.9, 1.1])"


def c09_hamiltonian():
    notes = []
    P = ProblemParams(3, 0.5, 1.8)
    one = GridFunction(-5, 5, np.ones(201), 0.0, 0.0)
    H = hamiltonian.hamiltonian_trace(P, hamiltonian.extension_field(P, one), one).values
    const = sy.A_constant(P) / sy.d_tilde_gamma(0.5) * (1 / 2.8 - 0.5)
    e1 = float(np.max(np.abs(H - const)))
    ok1 = e1 <= 1e-14 * abs(const)
    notes.append(f"v=1 err {e1:.1e}")

    Ps = ProblemParams(*HETEROCLINIC[0])
    v = heteroclinic_profile()
    F = hamiltonian.extension_field(Ps, v)
    H = hamiltonian.hamiltonian_trace(Ps, F, v).values
    dH = np.gradient(H, v.h)
    inner = v.interior(0.6)
    worst = float(np.max(dH[inner])) / float(np.max(np.abs(H)))
    ok2 = worst <= 1e-6
    notes.append(f"subcritical max dH/dt / max|H| {worst:.1e}")

    Pc = ProblemParams(3, 0.5, 2.0)
    b = odesolve.bubble_profile(Pc, -8, 8, 321)
    H = hamiltonian.hamiltonian_trace(Pc, hamiltonian.extension_field(Pc, b), b)
    inner = b.interior(0.6)
    vals = b.values
    scale = float(np.max(np.abs(sy.A_constant(Pc) / sy.d_tilde_gamma(0.5)
                                * (-vals ** 2 / 2 + vals ** (Pc.p + 1) / (Pc.p + 1)))))
    spread = float(np.ptp(H.values[inner])) / scale
    ok3 = spread < 1e-5
    notes.append(f"critical spread {spread:.1e}")
    return ok1 and ok2 and ok3, ", ".join(notes)


HETEROCLINIC = [(8, 0.5, 1.1911), (-8.0, 11.95, 400)]


def heteroclinic_profile() -> GridFunction:
    """Newton solution from 0 at t = -inf to 1 at t = +inf, started from a perturbed logistic guess."""
    (N, g, p), (a, b, n) = HETEROCLINIC
    P = ProblemParams(N, g, p)
    d0 = N - 2 * g - 2 * g / (p - 1)
    v0 = GridFunction.from_function(lambda t: 1 / (1 + np.exp(-d0 * t)), a, b, n, 0.0, d0)
    return odesolve.newton_profile(P, v0).grid


def c10_ball():
    P = ProblemParams(3, 0.5, 1.8)
    r, w = odesolve.torsion_solution(P, 32, 16)
    err = float(np.max(np.abs(w - odesolve.torsion_closed_form(3, 0.5, r))))
    lams = [0.05, 0.1, 0.2, 0.3, 0.4]
    sols = [odesolve.picard_ball(P, lam) for lam in lams]
    mono = all(np.all(a.w <= b.w + 1e-12) for a, b in zip(sols, sols[1:]))
    reps = [odesolve.uniform_bound_check(s) for s in sols]
    fine = odesolve.uniform_bound_check(odesolve.picard_ball(P, 0.2, n_r=96))
    c0 = reps[2].C0
    stable = abs(fine.C0 - c0) <= 0.2 * c0
    ok = err <= 1e-5 and mono and all(rp.holds for rp in reps) and stable
    return ok, (f"torsion err {err:.1e}, monotone in lambda {mono}, bound holds "
                f"{all(rp.holds for rp in reps)}, C0 {c0:.5f} -> {fine.C0:.5f} on refinement")


def _bump(t):
    out = np.zeros_like(t)
    inside = np.abs(t) < 6
    out[inside] = np.exp(-1 / (1 - (t[inside] / 6) ** 2))
    return out


def c11_round_trip():
    P = ProblemParams(3, 0.5, 2.0)
    lam = sy.hardy_constant(3, 0.5)
    h = GridFunction.from_function(_bump, -15, 15, 1201)
    worst = 0.0
    for m in range(4):
        for kappa in (0.0, lam / 2):
            w = greens.solve_mode(greens.green_series(P, m, kappa), h)
            back = kernels.apply_op(P, m, w, kappa=kappa).values
            worst = max(worst, float(np.max(np.abs(back - h.values))))
    return worst <= 1e-4, f"max |apply_op(solve_mode(h)) - h| = {worst:.1e}"


def c12_stirling():
    worst = 0.0
    for g in (0.25, 0.5, 0.75):
        th = abs(sy.theta(ProblemParams(3, g), 0, 1e4))
        worst = max(worst, abs(th / 1e4 ** (2 * g) - 1))
    return worst <= 5e-3, f"max |ratio - 1| = {worst:.2e}"


CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "Hardy-constant identity", c01_hardy_identity),
    (2, "normalization identity", c02_normalization),
    (3, "kappa = 0 pole ladder", c03_pole_ladder),
    (4, "m = 1 indicial root", c04_indicial_m1),
    (5, "stability classification", c05_stability),
    (6, "Green's function oracle", c06_green_oracle),
    (7, "kernel asymptotics", c07_kernel_asymptotics),
    (8, "residue asymptotics", c08_residue_asymptotics),
    (9, "Hamiltonian law", c09_hamiltonian),
    (10, "ball solver oracle", c10_ball),
    (11, "round trip", c11_round_trip),
    (12, "Stirling growth", c12_stirling),
]


def run_criterion(number: int) -> CriterionResult:
    for num, name, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            try:
                ok, detail = fn()
            except Exception as exc:  # a crash is a failure of that criterion
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            return CriterionResult(num, name, bool(ok), detail, time.perf_counter() - t0)
    raise KeyError(number)


def run_suite(numbers=None) -> list[CriterionResult]:
    nums = [c[0] for c in CRITERIA] if numbers is None else list(numbers)
    return [run_criterion(n) for n in nums]
