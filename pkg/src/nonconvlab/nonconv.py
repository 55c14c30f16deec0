"""Nonconventional sums S(N) = sum_{n<=N} F(X(q_1(n)), ..., X(q_l(n))).

X(k) is the digit at (0-based) stream index k.  The engine reads the stream
in chunks of n, keeps only running sums at the checkpoints, and sums exactly
(integers over a common denominator) whenever F has rational values.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import fsum
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ScheduleError, StreamExhaustedError
from .measures import MarkovSource, to_number
from .observables import Decomposition, MonteCarloEstimate, Observable, common_denominator, mean_F
from .schedules import Schedule, max_index, validate

__all__ = [
    "ConvergenceTrace",
    "FrequencyCounts",
    "FrequencySpec",
    "MembershipReport",
    "check_membership",
    "count_frequencies",
    "count_pair_frequencies",
    "default_checkpoints",
    "run_components",
    "run_ensemble",
    "run_slln",
]

CHUNK = 1 << 16
_INT_HEADROOM = 2**62


def default_checkpoints(N: int) -> list:
    """Powers of two from 2**10 (or 1 for short runs) up to N, then N itself."""
    if N < 1:
        raise ValueError("N must be >= 1")
    start = 1 << 10 if N > 1 << 10 else 1
    pts = []
    p = start
    while p < N:
        pts.append(p)
        p <<= 1
    pts.append(N)
    return pts


def _prepare(stream, schedule: Schedule, N: int, check_schedule: bool) -> None:
    if check_schedule:
        report = validate(schedule, N)
        if not report.ok:
            raise ScheduleError(report)
    need = max_index(schedule, N)
    if stream.length is not None and need >= stream.length:
        raise StreamExhaustedError(
            f"run needs index {need} but the stream has length {stream.length}")


def _chunks(N: int, chunk: int):
    lo = 1
    while lo <= N:
        hi = min(N, lo + chunk - 1)
        yield lo, hi
        lo = hi + 1


def _prefetch(stream, schedule: Schedule, N: int, extra: int = 0) -> None:
    """Realize every index a run will read, in one increasing pass.

    Lazily sampled Markov sources give order-dependent (though always
    correctly distributed) values; a fixed sorted pass makes the realization
    independent of chunking and worker count.
    """
    if not isinstance(stream.source, MarkovSource):
        return
    n = np.arange(1, N + 1, dtype=np.int64)
    parts = []
    for v in schedule.values(n):
        v = np.asarray(v, dtype=np.int64)
        parts.append(v)
        for d in range(1, extra + 1):
            parts.append(v + d)
    idx = np.unique(np.concatenate(parts)) + stream.offset
    stream.source.prefetch(idx)


def _gather(stream, schedule: Schedule, lo: int, hi: int, extra: int = 0) -> list:
    n = np.arange(lo, hi + 1, dtype=np.int64)
    cols = []
    for v in schedule.values(n):
        cols.append(stream.at(v))
        for d in range(1, extra + 1):
            cols.append(stream.at(np.asarray(v, dtype=np.int64) + d))
    return cols


def _integer_table(table: np.ndarray, N: int):
    """(integer table, denominator) for exact tables, else (float table, None)."""
    if table.dtype == float:
        return table, None
    D = common_denominator(table)
    ints = np.vectorize(lambda v: int(Fraction(v) * D), otypes=[object])(table)
    top = max((abs(int(v)) for v in ints.ravel()), default=0)
    if top * N < _INT_HEADROOM:
        return ints.astype(np.int64), D
    return ints, D


class _CheckpointSums:
    """Running sum of one per-n value sequence, sampled at checkpoints."""

    def __init__(self, checkpoints: Sequence[int], denom: Optional[int]):
        self.points = list(checkpoints)
        self.denom = denom
        self.total = 0 if denom is not None else 0.0
        self.values: list = []
        self._next = 0

    def add(self, lo: int, vals: np.ndarray) -> None:
        if self.denom is None:
            csum = np.cumsum(vals.astype(float)) + self.total
        else:
            csum = np.cumsum(vals) + self.total
        hi = lo + len(vals) - 1
        while self._next < len(self.points) and self.points[self._next] <= hi:
            k = self.points[self._next] - lo
            v = csum[k]
            self.values.append(int(v) if self.denom is not None else float(v))
            self._next += 1
        if len(vals):
            self.total = int(csum[-1]) if self.denom is not None else float(csum[-1])

    def sums(self) -> list:
        if self.denom is None:
            return list(self.values)
        return [Fraction(v, self.denom) for v in self.values]


def _evaluate_int(table: np.ndarray, cols: list) -> np.ndarray:
    return table[tuple(np.asarray(c, dtype=np.int64) for c in cols)]


@dataclass
class ConvergenceTrace:
    """S(N)/N at increasing checkpoints, with the limit it should approach."""

    checkpoints: list
    sums: list
    averages: list
    target: object = None
    component_sums: Optional[list] = None
    component_averages: Optional[list] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ValueError("checkpoints must increase")

    @property
    def final_average(self) -> float:
        return self.averages[-1]

    @property
    def target_value(self) -> float:
        t = self.target
        if t is None:
            return float("nan")
        return t.estimate if isinstance(t, MonteCarloEstimate) else float(t)

    @property
    def final_deviation(self) -> float:
        return abs(self.averages[-1] - self.target_value)

    def rows(self) -> list:
        out = []
        for j, N in enumerate(self.checkpoints):
            row = [N, self.averages[j], self.target_value]
            if self.component_averages is not None:
                row += [comp[j] for comp in self.component_averages]
            out.append(row)
        return out

    def header(self) -> list:
        cols = ["N", "average", "target"]
        if self.component_averages is not None:
            cols += [f"component_{i}" for i in range(1, len(self.component_averages) + 1)]
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        return buf.getvalue()


def _target(F: Observable, law, target):
    if target is not None:
        return to_number(target)
    if law is None:
        return None
    return mean_F(F, law)


def run_slln(stream, schedule: Schedule, F: Observable, law=None, N: int = 1 << 16,
             checkpoints: Optional[Sequence[int]] = None, *, target=None,
             decomposition: Optional[Decomposition] = None, provenance: Optional[dict] = None,
             check_schedule: bool = True, chunk: int = CHUNK) -> ConvergenceTrace:
    """Accumulate S(N) along the schedule and record S(N)/N at checkpoints.

    The target is mean_F(F, law) unless given; with neither, it is NaN.  When ``decomposition`` is
    passed the component sums S_i(N) are accumulated in the same pass and
    the identity S(N) = N*mean + sum_i S_i(N) is asserted at every checkpoint.
    """
    if F.ell != schedule.ell:
        raise ValueError(f"F takes {F.ell} arguments but the schedule has {schedule.ell}")
    checkpoints = list(checkpoints) if checkpoints is not None else default_checkpoints(N)
    if checkpoints[-1] != N or checkpoints[0] < 1:
        raise ValueError("checkpoints must lie in [1, N] and end at N")
    _prepare(stream, schedule, N, check_schedule)
    _prefetch(stream, schedule, N)
    tgt = _target(F, law, target)

    if F.table is not None:
        main_table, main_den = _integer_table(F.table, N)
        main_eval = lambda cols: _evaluate_int(main_table, cols)  # noqa: E731
    else:
        main_den = 1
        main_eval = lambda cols: np.asarray(F(*cols), dtype=np.int64)  # noqa: E731
    main = _CheckpointSums(checkpoints, main_den)

    comp_acc, comp_tables = [], []
    if decomposition is not None:
        for table in decomposition.components:
            t, d = _integer_table(table, N)
            comp_tables.append(t)
            comp_acc.append(_CheckpointSums(checkpoints, d))

    for lo, hi in _chunks(N, chunk):
        cols = _gather(stream, schedule, lo, hi)
        main.add(lo, main_eval(cols))
        for i, (t, acc) in enumerate(zip(comp_tables, comp_acc), start=1):
            acc.add(lo, _evaluate_int(t, cols[:i]))

    sums = main.sums()
    averages = [float(s) / n if main.denom is None else float(s / n) for s, n in zip(sums, checkpoints)]
    comp_sums = comp_avg = None
    if decomposition is not None:
        comp_sums = [acc.sums() for acc in comp_acc]
        comp_avg = [[float(s) / n if acc.denom is None else float(s / n)
                     for s, n in zip(cs, checkpoints)] for cs, acc in zip(comp_sums, comp_acc)]
        _check_reconstruction(sums, comp_sums, decomposition, checkpoints)
    return ConvergenceTrace(checkpoints, sums, averages, tgt, comp_sums, comp_avg,
                            dict(provenance or {}))


def _check_reconstruction(sums, comp_sums, dec: Decomposition, checkpoints) -> None:
    for j, N in enumerate(checkpoints):
        rebuilt = N * dec.mean + sum(cs[j] for cs in comp_sums)
        if dec.exact and isinstance(sums[j], Fraction):
            ok = rebuilt == sums[j]
        else:
            ok = abs(float(rebuilt) - float(sums[j])) <= 1e-9 * max(1.0, float(N))
        if not ok:
            raise AssertionError(
                f"reconstruction failed at N={N}: S(N)={sums[j]} but N*mean+sum S_i={rebuilt}")


def run_components(stream, schedule: Schedule, decomposition: Decomposition, N: int,
                   checkpoints: Optional[Sequence[int]] = None, **kwargs) -> ConvergenceTrace:
    """S_i(N) for every component, with the exact reconstruction check."""
    return run_slln(stream, schedule, decomposition.observable, None, N, checkpoints,
                    target=decomposition.mean, decomposition=decomposition, **kwargs)


# ---------------------------------------------------------------------------
# frequency counters
# ---------------------------------------------------------------------------


@dataclass
class FrequencyCounts:
    """Counts of digit words read along the schedule for n = 1..N."""

    counts: dict
    N: int

    def __getitem__(self, word) -> int:
        return self.counts.get(tuple(word), 0)

    def frequency(self, word) -> float:
        return self[word] / self.N

    def total(self) -> int:
        return sum(self.counts.values())


def _tally(cols: list, alphabet: Optional[int], acc: Counter) -> None:
    if alphabet is not None and all(c.dtype == np.int64 for c in cols):
        code = np.zeros(len(cols[0]), dtype=np.int64)
        for c in reversed(cols):
            code = code * alphabet + c
        vals, cnt = np.unique(code, return_counts=True)
        for v, c in zip(vals.tolist(), cnt.tolist()):
            word = []
            for _ in cols:
                word.append(v % alphabet)
                v //= alphabet
            acc[tuple(word)] += c
    elif all(c.dtype == np.int64 for c in cols):
        rows, cnt = np.unique(np.stack(cols, axis=1), axis=0, return_counts=True)
        for r, c in zip(rows.tolist(), cnt.tolist()):
            acc[tuple(r)] += c
    else:
        acc.update(zip(*[[int(x) for x in c] for c in cols]))


def _count(stream, schedule, N, extra, words, check_schedule, chunk) -> FrequencyCounts:
    _prepare(stream, schedule, N, check_schedule)
    need = max_index(schedule, N) + extra
    if stream.length is not None and need >= stream.length:
        raise StreamExhaustedError(f"run needs index {need} but the stream has length {stream.length}")
    _prefetch(stream, schedule, N, extra)
    acc: Counter = Counter()
    for lo, hi in _chunks(N, chunk):
        _tally(_gather(stream, schedule, lo, hi, extra), stream.alphabet, acc)
    if words is not None:
        return FrequencyCounts({tuple(w): acc.get(tuple(w), 0) for w in words}, N)
    return FrequencyCounts(dict(acc), N)


def count_frequencies(stream, schedule: Schedule, words: Optional[Iterable] = None, N: int = 1,
                      *, check_schedule: bool = True, chunk: int = CHUNK) -> FrequencyCounts:
    """N_alpha = #{n <= N : (X(q_1(n)), ..., X(q_l(n))) = alpha}.

    ``words=None`` returns every observed word.
    """
    words = None if words is None else [tuple(int(a) for a in w) for w in words]
    return _count(stream, schedule, N, 0, words, check_schedule, chunk)


def count_pair_frequencies(stream, schedule: Schedule, pairs: Optional[Iterable] = None,
                           N: int = 1, *, check_schedule: bool = True,
                           chunk: int = CHUNK) -> FrequencyCounts:
    """N_{alpha,beta}: digits at q_i(n) spell alpha and digits at q_i(n)+1 spell beta.

    Keys are ``(alpha, beta)`` pairs of l-tuples.
    """
    raw = _count(stream, schedule, N, 1, None, check_schedule, chunk)
    counts: dict = {}
    for key, c in raw.counts.items():
        alpha, beta = tuple(key[0::2]), tuple(key[1::2])
        counts[(alpha, beta)] = counts.get((alpha, beta), 0) + c
    if pairs is not None:
        wanted = [(tuple(a), tuple(b)) for a, b in pairs]
        counts = {p: counts.get(p, 0) for p in wanted}
    return FrequencyCounts(counts, N)


# ---------------------------------------------------------------------------
# prescribed frequencies
# ---------------------------------------------------------------------------


class FrequencySpec:
    """Target frequencies p_alpha over l-words.

    Either an explicit finite map, or a rule (such as a product of marginal
    weights) that also covers infinite alphabets.
    """

    def __init__(self, ell: int, probabilities: Optional[dict] = None,
                 rule: Optional[Callable] = None, tol: float = 1e-12):
        if (probabilities is None) == (rule is None):
            raise ValueError("give exactly one of probabilities or rule")
        self.ell = ell
        self.rule = rule
        self.probabilities = None
        if probabilities is not None:
            probs = {}
            for w, p in probabilities.items():
                w = tuple(int(a) for a in (w if not isinstance(w, str) else w.split(",")))
                if len(w) != ell:
                    raise ValueError(f"word {w} does not have length {ell}")
                p = to_number(p)
                if p < 0:
                    raise ValueError(f"negative frequency for {w}")
                probs[w] = p
            total = sum(probs.values())
            if abs(float(total) - 1.0) > tol:
                raise ValueError(f"frequencies sum to {float(total)}, not 1")
            self.probabilities = probs

    @classmethod
    def product(cls, law, ell: int) -> "FrequencySpec":
        """p_alpha = prod_i weight(alpha_i)."""
        def rule(word):
            out = 1
            for a in word:
                out = out * law.weight(a)
            return out
        return cls(ell, rule=rule)

    def p(self, word) -> object:
        word = tuple(word)
        if self.probabilities is not None:
            return self.probabilities.get(word, 0)
        return self.rule(word)

    def support(self) -> Optional[list]:
        if self.probabilities is None:
            return None
        return sorted(w for w, p in self.probabilities.items() if p > 0)


@dataclass
class MembershipReport:
    sup_deviation: float
    deviations: dict
    N: int
    tolerance: Optional[float] = None

    @property
    def within(self) -> Optional[bool]:
        if self.tolerance is None:
            return None
        return self.sup_deviation <= self.tolerance


def check_membership(counts: FrequencyCounts, spec: FrequencySpec,
                     tolerance: Optional[float] = None,
                     words: Optional[Iterable] = None) -> MembershipReport:
    """|N_alpha/N - p_alpha| for observed words, listed words, and the spec's support.

    A finite-sample diagnostic; it cannot prove membership of a limit set.
    """
    keys = set(counts.counts)
    if words is not None:
        keys |= {tuple(w) for w in words}
    supp = spec.support()
    if supp is not None:
        keys |= set(supp)
    devs = {w: abs(counts[w] / counts.N - float(spec.p(w))) for w in sorted(keys)}
    if supp is None:
        # unseen words deviate by p_alpha, bounded by their total mass
        seen = fsum(float(spec.p(w)) for w in keys)
        devs_unseen = max(0.0, 1.0 - seen)
    else:
        devs_unseen = 0.0
    sup = max([*devs.values(), devs_unseen], default=0.0)
    return MembershipReport(sup, devs, counts.N, tolerance)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


def run_ensemble(job: Callable[[int], object], seeds: Sequence[int], workers: int = 1) -> list:
    """Run ``job(seed)`` for each seed; results come back in seed order."""
    seeds = list(seeds)
    if workers <= 1:
        return [job(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, seeds))
