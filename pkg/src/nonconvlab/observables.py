"""Observables F(x_1, ..., x_l) and their martingale-style decomposition.

With mu the one-dimensional law and G_i the integral of F over its last
l - i arguments, F = F_0 + F_1 + ... + F_l where F_0 = G_0 is the mean and
F_i = G_i - G_{i-1}.  Each F_i integrates to zero in its last argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import lcm
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ResourceCapError
from .measures import BernoulliLaw, to_number

__all__ = [
    "Decomposition",
    "HolderConstants",
    "MonteCarloEstimate",
    "Observable",
    "decompose",
    "mean_F",
]

DEFAULT_CAP = 10**7


class HolderConstants(NamedTuple):
    K: float
    iota: float
    kappa: float


def _normalize_table(values) -> np.ndarray:
    """int64 for integer tables, object-of-Fraction for rationals, else float64."""
    arr = np.asarray(values, dtype=object)
    flat = [to_number(v) for v in arr.ravel()]
    if all(isinstance(v, Fraction) for v in flat):
        if all(v.denominator == 1 for v in flat):
            return np.asarray([int(v) for v in flat], dtype=np.int64).reshape(arr.shape)
        out = np.empty(arr.shape, dtype=object)
        out.ravel()[:] = flat
        return out
    return np.asarray([float(v) for v in flat], dtype=float).reshape(arr.shape)


def _is_exact_array(a: np.ndarray) -> bool:
    return a.dtype == np.int64 or a.dtype == object


class Observable:
    """A function of l digit arguments.

    Over a finite alphabet {0..m-1} it is a table of shape (m,)*l.
    ``IndicatorProduct`` observables also work over the positive integers
    (continued-fraction digits), where there is no table.
    """

    def __init__(self, ell: int, alphabet: Optional[int], table=None,
                 func: Optional[Callable] = None, kind: str = "table", word=None):
        if ell < 1:
            raise ValueError("an observable needs at least one argument")
        self.ell = ell
        self.alphabet = alphabet
        self.table = None if table is None else _normalize_table(table)
        if self.table is not None and self.table.shape != (alphabet,) * ell:
            raise ValueError(f"table shape {self.table.shape} != {(alphabet,) * ell}")
        self.func = func
        self.kind = kind
        self.word = None if word is None else tuple(int(a) for a in word)
        if self.table is None and func is None:
            raise ValueError("an observable needs a table or an evaluator")

    # constructors -----------------------------------------------------------
    @classmethod
    def indicator_product(cls, word: Sequence[int], alphabet: Optional[int] = None) -> "Observable":
        """F = 1{x_1 = word[0]} * ... * 1{x_l = word[l-1]}."""
        word = tuple(int(a) for a in word)
        ell = len(word)
        table = None
        if alphabet is not None:
            if any(not 0 <= a < alphabet for a in word):
                raise ValueError("indicator word outside the alphabet")
            table = np.zeros((alphabet,) * ell, dtype=np.int64)
            table[word] = 1

        def func(*xs):
            hit = np.ones(len(xs[0]), dtype=bool)
            for x, a in zip(xs, word):
                hit &= np.asarray(x == a, dtype=bool)
            return hit.astype(np.int64)

        return cls(ell, alphabet, table, func, kind="indicator_product", word=word)

    @classmethod
    def from_table(cls, values, alphabet: Optional[int] = None) -> "Observable":
        """Nested list, ndarray, or dict mapping digit tuples (or "0,1" keys) to values."""
        if isinstance(values, dict):
            items = {}
            for key, v in values.items():
                if isinstance(key, str):
                    key = tuple(int(t) for t in key.replace(" ", "").split(","))
                elif isinstance(key, int):
                    key = (key,)
                items[tuple(key)] = v
            ell = len(next(iter(items)))
            m = alphabet or (max(max(k) for k in items) + 1)
            arr = np.zeros((m,) * ell, dtype=object)
            arr[...] = 0
            for key, v in items.items():
                arr[key] = to_number(v)
            return cls(ell, m, arr)
        arr = np.asarray(values, dtype=object)
        return cls(arr.ndim, arr.shape[0], arr)

    @classmethod
    def constant(cls, c, ell: int, alphabet: int) -> "Observable":
        arr = np.empty((alphabet,) * ell, dtype=object)
        arr[...] = to_number(c)
        return cls(ell, alphabet, arr, kind="constant")

    @classmethod
    def from_function(cls, f: Callable, ell: int, alphabet: int) -> "Observable":
        """Tabulate a scalar function over all alphabet**ell tuples."""
        arr = np.empty((alphabet,) * ell, dtype=object)
        for idx in np.ndindex(*arr.shape):
            arr[idx] = f(*idx)
        return cls(ell, alphabet, arr)

    # evaluation -------------------------------------------------------------
    @property
    def exact(self) -> bool:
        return self.table is None or _is_exact_array(self.table)

    def __call__(self, *xs) -> np.ndarray:
        if len(xs) != self.ell:
            raise TypeError(f"expected {self.ell} arguments, got {len(xs)}")
        if self.table is not None:
            return self.table[tuple(np.asarray(x, dtype=np.int64) for x in xs)]
        return self.func(*xs)

    def sup_abs(self) -> float:
        if self.table is None:
            return 1.0 if self.kind == "indicator_product" else float("inf")
        return float(max(abs(v) for v in self.table.ravel()))

    def holder(self) -> HolderConstants:
        """Constants valid for any F on an integer alphabet with the
        discrete metric: distinct points are at distance >= 1, so
        K = 2 sup|F| with iota = kappa = 1 works."""
        return HolderConstants(K=max(2.0 * self.sup_abs(), 1e-300), iota=1.0, kappa=1.0)

    def to_config(self) -> dict:
        if self.kind == "indicator_product":
            return {"kind": "indicator_product", "word": list(self.word)}
        return {"kind": "table", "values": _table_to_nested(self.table)}

    def __repr__(self) -> str:
        if self.kind == "indicator_product":
            return f"Observable.indicator_product({list(self.word)}, alphabet={self.alphabet})"
        return f"Observable(ell={self.ell}, alphabet={self.alphabet}, kind={self.kind})"


def _table_to_nested(table: np.ndarray):
    return np.vectorize(lambda v: str(v), otypes=[object])(table).tolist()


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


class MonteCarloEstimate(NamedTuple):
    estimate: float
    stderr: float
    samples: int


def _marginal(law) -> Optional[BernoulliLaw]:
    """Finite one-dimensional marginal on {0..m-1}, or None."""
    marg = law.mean_digit_law() if hasattr(law, "mean_digit_law") else None
    if isinstance(marg, BernoulliLaw) and marg.offset == 0:
        return marg
    return None


def _weights_for(F: Observable, marg: BernoulliLaw, exact: bool) -> np.ndarray:
    m = F.alphabet
    if marg.m > m:
        if any(marg.weights[j] != 0 for j in range(m, marg.m)):
            raise ValueError("law charges digits outside the observable's alphabet")
    zero = Fraction(0)
    w = [marg.weights[j] if j < marg.m else zero for j in range(m)]
    if exact:
        out = np.empty(m, dtype=object)
        out[:] = [Fraction(v) for v in w]
        return out
    return np.asarray([float(v) for v in w])


def _check_cap(F: Observable, cap: int) -> None:
    if F.alphabet is not None and F.alphabet**F.ell > cap:
        raise ResourceCapError(f"{F.alphabet}**{F.ell} tuples exceed the cap {cap}")


def _integrate_last(table: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = (table * w).sum(axis=-1)
    return out if isinstance(out, np.ndarray) else np.asarray(out, dtype=table.dtype)


def mean_F(F: Observable, law, cap: int = DEFAULT_CAP, samples: int = 100_000,
           seed: int = 0):
    """F-bar: the integral of F against the l-fold product of the marginal.

    Exact (a Fraction for rational inputs) whenever the marginal is finite
    and F is tabulated.  Indicator products over any alphabet reduce to a
    product of atom weights.  Everything else falls back to Monte Carlo and
    returns a :class:`MonteCarloEstimate`.
    """
    marg = _marginal(law)
    if F.kind == "indicator_product" and hasattr(law, "weight") and marg is None:
        return reduce(lambda acc, a: acc * law.weight(a), F.word, 1)
    if marg is not None and F.table is not None:
        _check_cap(F, cap)
        exact = F.exact and marg.exact
        w = _weights_for(F, marg, exact)
        g = F.table.astype(object) if exact else F.table.astype(float)
        for _ in range(F.ell):
            g = _integrate_last(g, w)
        val = g.item() if isinstance(g, np.ndarray) else g
        return Fraction(val) if exact else float(val)
    if marg is not None and F.kind == "indicator_product":
        return reduce(lambda acc, a: acc * marg.weight(a), F.word, Fraction(1) if marg.exact else 1.0)
    return _mean_monte_carlo(F, law, samples, seed)


def _mean_monte_carlo(F: Observable, law, samples: int, seed: int) -> MonteCarloEstimate:
    marg = law.mean_digit_law() if hasattr(law, "mean_digit_law") else law
    idx = np.arange(samples, dtype=np.int64)
    xs = [marg.source(seed, stream=j).digits_at(idx) for j in range(F.ell)]
    vals = np.asarray(F(*xs), dtype=float)
    return MonteCarloEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples)), samples)


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------


@dataclass
class Decomposition:
    """F = mean + sum_i components[i-1], with components[i-1] of arity i."""

    observable: Observable
    mean: object
    components: list
    weights: np.ndarray
    exact: bool

    @property
    def ell(self) -> int:
        return self.observable.ell

    def component(self, i: int, *xs) -> np.ndarray:
        """Evaluate F_i (1-based) on digit arrays x_1..x_i."""
        return self.components[i - 1][tuple(np.asarray(x, dtype=np.int64) for x in xs)]

    def reconstruct(self) -> np.ndarray:
        """mean + sum of all F_i broadcast over the full tuple space."""
        ell = self.ell
        total = np.full((self.observable.alphabet,) * ell, self.mean, dtype=object if self.exact else float)
        for i, comp in enumerate(self.components, start=1):
            total = total + comp.reshape(comp.shape + (1,) * (ell - i))
        return total

    def centering_residuals(self) -> list:
        """For each F_i, the integral over its last argument (should vanish)."""
        return [_integrate_last(comp, self.weights) for comp in self.components]


def decompose(F: Observable, law, cap: int = DEFAULT_CAP) -> Decomposition:
    """Split F into its mean and the centered pieces F_1..F_l.

    Exact rational tables when both F and the law's weights are rational.
    """
    marg = _marginal(law)
    if marg is None or F.table is None:
        raise ValueError("decomposition needs a tabulated F and a finite-alphabet law")
    _check_cap(F, cap)
    exact = F.exact and marg.exact
    w = _weights_for(F, marg, exact)
    g = [F.table.astype(object) if exact else F.table.astype(float)]
    for _ in range(F.ell):
        g.append(_integrate_last(g[-1], w))
    g.reverse()  # g[i] now integrates out the last l - i arguments
    mean = g[0].item() if isinstance(g[0], np.ndarray) else g[0]
    comps = [g[i] - g[i - 1][..., None] for i in range(1, F.ell + 1)]
    mean = Fraction(mean) if exact else float(mean)
    return Decomposition(F, mean, comps, w, exact)


def common_denominator(table: np.ndarray) -> int:
    """LCM of denominators of an exact table (1 for integer tables)."""
    if table.dtype != object:
        return 1
    return reduce(lcm, (Fraction(v).denominator for v in table.ravel()), 1)
