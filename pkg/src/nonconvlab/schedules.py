"""Index schedules q_1(n) < ... < q_l(n) and their gap condition.

A schedule is valid on [1, n_max] with gap eps when, for every n there,
q_i(n) >= q_{i-1}(n) + eps*n and q_i(n+1) >= q_i(n) + eps.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Exponential",
    "Polynomial",
    "Schedule",
    "ScheduleReport",
    "ScheduleViolation",
    "max_index",
    "validate",
]

_SAFE_INT = 2**62


class Polynomial:
    """n -> sum_k coeffs[k] * n**k with integer coefficients (constant first)."""

    def __init__(self, coeffs: Sequence[int]):
        coeffs = [int(c) for c in coeffs]
        if not coeffs:
            raise ValueError("empty coefficient list")
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        self.coeffs = tuple(coeffs)

    def __call__(self, n: int) -> int:
        out = 0
        for c in reversed(self.coeffs):
            out = out * n + c
        return out

    def evaluate(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        top = int(np.abs(n).max()) if n.size else 0
        if sum(abs(c) * top**k for k, c in enumerate(self.coeffs)) >= _SAFE_INT:
            return np.asarray([self(int(k)) for k in n], dtype=object)
        out = np.zeros_like(n)
        for c in reversed(self.coeffs):
            out = out * n + c
        return out

    def to_config(self) -> dict:
        return {"poly": list(self.coeffs)}

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coeffs)})"


class Exponential:
    """n -> floor(scale * base**n), exact for rational base and scale."""

    def __init__(self, base, scale=1):
        self.base = Fraction(str(base)) if isinstance(base, float) else Fraction(base)
        self.scale = Fraction(str(scale)) if isinstance(scale, float) else Fraction(scale)
        if self.base <= 1 or self.scale <= 0:
            raise ValueError("exponential schedules need base > 1 and scale > 0")

    def __call__(self, n: int) -> int:
        v = self.scale * self.base**n
        return v.numerator // v.denominator

    def evaluate(self, n: np.ndarray) -> np.ndarray:
        vals = [self(int(k)) for k in np.asarray(n).ravel()]
        if vals and max(vals) < _SAFE_INT:
            return np.asarray(vals, dtype=np.int64)
        return np.asarray(vals, dtype=object)

    def to_config(self) -> dict:
        return {"exp": {"base": str(self.base), "scale": str(self.scale)}}

    def __repr__(self) -> str:
        return f"Exponential(base={self.base}, scale={self.scale})"


def _parse_component(spec):
    if isinstance(spec, (Polynomial, Exponential)):
        return spec
    if isinstance(spec, dict) and "poly" in spec:
        return Polynomial(spec["poly"])
    if isinstance(spec, dict) and "exp" in spec:
        e = spec["exp"]
        return Exponential(Fraction(str(e.get("base", 2))), Fraction(str(e.get("scale", 1))))
    if isinstance(spec, dict) and "linear" in spec:
        return Polynomial([0, spec["linear"]])
    if isinstance(spec, dict) and "affine" in spec:
        a, b = spec["affine"]
        return Polynomial([b, a])
    raise ValueError(f"unrecognized schedule component {spec!r}")


@dataclass
class Schedule:
    """Family of l index functions with a declared gap eps in (0, 1]."""

    functions: list
    eps: Fraction = Fraction(1, 2)

    def __post_init__(self):
        self.functions = [_parse_component(f) for f in self.functions]
        self.eps = Fraction(str(self.eps)) if isinstance(self.eps, float) else Fraction(self.eps)
        if not self.functions:
            raise ValueError("a schedule needs at least one function")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")

    @classmethod
    def polynomials(cls, *coeff_lists, eps=Fraction(1, 2)) -> "Schedule":
        return cls([Polynomial(c) for c in coeff_lists], eps)

    @classmethod
    def from_config(cls, spec, eps=None) -> "Schedule":
        if isinstance(spec, dict):
            spec = [spec]
        return cls(list(spec), Fraction(str(eps)) if eps is not None else Fraction(1, 2))

    @property
    def ell(self) -> int:
        return len(self.functions)

    def values(self, n) -> list:
        """One array of indices per component for the given n values."""
        return [f.evaluate(n) for f in self.functions]

    def __call__(self, i: int, n: int) -> int:
        """q_i(n) with 1-based i."""
        return self.functions[i - 1](n)

    def to_config(self) -> list:
        return [f.to_config() for f in self.functions]


@dataclass(frozen=True)
class ScheduleViolation:
    i: int
    n: int
    condition: str

    def __str__(self) -> str:
        return f"violation of the {self.condition} condition at (i={self.i}, n={self.n})"


@dataclass
class ScheduleReport:
    ok: bool
    n_max: int
    eps: Fraction
    violation: Optional[ScheduleViolation] = None
    max_eps: Optional[Fraction] = None


def validate(schedule: Schedule, n_max: int) -> ScheduleReport:
    """Exhaustive check of the gap and growth conditions for 1 <= n <= n_max.

    The growth condition at n compares q_i(n+1) with q_i(n), so it is checked
    for n < n_max only (no evaluation outside the range).  The earliest
    violation is ordered by n, then by i.  Also reports the largest eps in
    (0, 1] that passes on the range, computed exactly.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(1, n_max + 1, dtype=np.int64)
    vals = [np.asarray(v) for v in schedule.values(n)]
    eps = schedule.eps
    a, b = eps.numerator, eps.denominator
    first: Optional[ScheduleViolation] = None
    best = Fraction(1)

    def consider(mask, i, cond):
        nonlocal first
        bad = np.flatnonzero(mask)
        if bad.size:
            cand = ScheduleViolation(i, int(n[bad[0]]), cond)
            if first is None or (cand.n, cand.i) < (first.n, first.i):
                first = cand

    for i, v in enumerate(vals, start=1):
        consider(v < 1, i, "positivity")
        if i > 1:
            gap = v - vals[i - 2]
            consider(b * gap < a * n, i, "separation")
            k = _argmin_ratio(gap, n)
            best = min(best, Fraction(int(gap[k]), int(n[k])))
        if n_max > 1:
            inc = v[1:] - v[:-1]
            consider(np.concatenate([b * inc < a, [False]]), i, "growth")
            best = min(best, Fraction(int(inc.min())))
    return ScheduleReport(ok=first is None, n_max=n_max, eps=eps, violation=first,
                          max_eps=best if best > 0 else None)


def _argmin_ratio(gap: np.ndarray, n: np.ndarray) -> int:
    # float ratio locates the minimizer; ties are re-resolved exactly
    r = gap.astype(float) / n.astype(float)
    lo = r.min()
    cands = np.flatnonzero(r <= lo + 1e-12 * abs(lo) + 1e-300)
    return int(min(cands, key=lambda k: Fraction(int(gap[k]), int(n[k]))))


def max_index(schedule: Schedule, N: int) -> int:
    """q_l(N): the largest stream index a run of length N reads."""
    return max(f(N) for f in schedule.functions)
