"""Uniform 1-D grid samples with declared exponential tails."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DecayMismatch, DomainError


@dataclass(frozen=True)
class GridFunction:
    """Samples of f on a uniform grid.

    decay_plus is delta in f = O(exp(-delta t)) as t -> +inf and
    decay_minus is delta0 in f = O(exp(delta0 t)) as t -> -inf.
    math.inf marks compact support.
    """
    t_min: float
    t_max: float
    values: np.ndarray = field(repr=False)
    decay_plus: float = math.inf
    decay_minus: float = math.inf

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 16:
            raise DomainError("a grid function needs at least 16 samples")
        if not self.t_max > self.t_min:
            raise DomainError("t_max must exceed t_min")
        if not np.all(np.isfinite(v)):
            raise DomainError("non-finite samples")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n)

    @property
    def h(self) -> float:
        return (self.t_max - self.t_min) / (self.n - 1)

    @classmethod
    def from_function(cls, f, t_min, t_max, n, decay_plus=math.inf, decay_minus=math.inf):
        t = np.linspace(t_min, t_max, n)
        return cls(t_min, t_max, np.asarray(f(t), dtype=float), decay_plus, decay_minus)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.t_min, self.t_max, values, self.decay_plus, self.decay_minus)

    def interior(self, fraction=0.5) -> np.ndarray:
        """Boolean mask of the central `fraction` of the window."""
        t = self.t
        mid = 0.5 * (self.t_min + self.t_max)
        half = 0.5 * fraction * (self.t_max - self.t_min)
        return np.abs(t - mid) <= half + 1e-12

    def check_decay(self, factor=10.0, span=8):
        """Declared tails must be consistent with the end samples within `factor`."""
        v = np.abs(self.values)
        scale = v.max() if v.size else 0.0
        if scale == 0:
            return
        h = self.h
        for rate, a, b in ((self.decay_plus, v[-1 - span], v[-1]),
                           (self.decay_minus, v[span], v[0])):
            if b <= 1e-12 * scale or a == 0:
                continue
            if math.isinf(rate):
                raise DecayMismatch("compact support declared but end samples are not small")
            predicted = a * math.exp(-rate * span * h)
            if not (predicted / factor <= b <= predicted * factor):
                raise DecayMismatch(f"declared decay {rate} inconsistent with samples")

    # ---------------------------------------------------------------- I/O
    def to_csv(self, path, column="value", header_extra=""):
        with open(path, "w", newline="") as fh:
            fh.write(f"# decay_plus={self.decay_plus!r} decay_minus={self.decay_minus!r}{header_extra}\n")
            w = csv.writer(fh)
            w.writerow(["t", column])
            for t, v in zip(self.t, self.values):
                w.writerow([f"{t:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        """Read a two-column (t, value) CSV whose first line declares the decay exponents."""
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
        if not lines:
            raise DomainError(f"{path}: empty file")
        meta = {}
        for tok in lines[0].lstrip("#").replace(",", " ").split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                meta[k.strip()] = v.strip()
        if "decay_plus" not in meta or "decay_minus" not in meta:
            raise DomainError(f"{path}: header must declare decay_plus and decay_minus")
        rows = []
        for ln in lines[1:]:
            if ln.startswith("#"):
                continue
            parts = ln.split(",")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except (ValueError, IndexError):
                continue  # column titles
        if len(rows) < 16:
            raise DomainError(f"{path}: need at least 16 samples")
        arr = np.array(rows)
        t = arr[:, 0]
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12) or dt[0] <= 0:
            raise DomainError(f"{path}: samples must be on a uniform increasing grid")
        return cls(t[0], t[-1], arr[:, 1], float(meta["decay_plus"]), float(meta["decay_minus"]))
