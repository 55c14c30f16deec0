"""Dimension formulas for digit-frequency sets and the constructions behind them.

Entropy-over-log-m values for Bernoulli and Markov digit laws, the
perturbation that fills zero weights, local dimension along cylinders,
explicit typical points, and the continued-fraction lower-bound certificate.
All logarithms are natural; 0 ln 0 is taken as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import fsum, log
from typing import Optional, Sequence

import numpy as np

from .digitkit import DigitStream, last_continuant
from .measures import (
    BernoulliLaw,
    InvalidLawError,
    MarkovLaw,
    TruncatedCFLaw,
    _check_normalized,
    _is_exact,
    _matrix,
    _vector,
    sample_stream,
    stationary_vector,
)
from .schedules import Schedule

__all__ = [
    "CFCertificate",
    "DimensionResult",
    "GzbConstruction",
    "LocalDimensionTrace",
    "PerturbedVector",
    "cf_bound_certificate",
    "construct_gzb",
    "construct_up_point",
    "entropy",
    "hd_bernoulli",
    "hd_markov",
    "local_dimension_trace",
    "perturb_bernoulli",
    "perturb_markov",
]


def _ln(x) -> float:
    if isinstance(x, Fraction):
        return log(x.numerator) - log(x.denominator)
    return log(x)


def _ln_ratio(a, b) -> float:
    """ln(a / b), exact-input aware."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return _ln(a / b)
    return log(float(a) / float(b))


def entropy(weights) -> tuple:
    """(-sum w ln w, number of zero weights skipped).

    Equal weights are grouped, so a uniform vector gives exactly ln m.
    """
    groups: dict = {}
    zeros = 0
    for w in weights:
        if w == 0:
            zeros += 1
        else:
            groups[w] = groups.get(w, 0) + 1
    return fsum(float(c * w) * -_ln(w) for w, c in groups.items()), zeros


@dataclass
class DimensionResult:
    value: float
    formula: str
    inputs: dict
    zero_terms: int = 0
    interval: Optional[tuple] = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"formula": self.formula, "inputs": self.inputs, "diagnostics": dict(self.diagnostics)}
        out["diagnostics"]["zero_terms"] = self.zero_terms
        if self.interval is not None:
            out["interval"] = [float(self.interval[0]), float(self.interval[1])]
        else:
            out["value"] = self.value
        return out


def hd_bernoulli(r: Sequence, m: Optional[int] = None) -> DimensionResult:
    """-sum r_j ln r_j / ln m for a probability vector on m digits."""
    w = _vector(r)
    m = len(w) if m is None else int(m)
    if len(w) > m:
        raise InvalidLawError(f"{len(w)} weights for an alphabet of size {m}")
    if m < 2:
        raise InvalidLawError("need m >= 2")
    if any(v < 0 for v in w):
        raise InvalidLawError("weights must be nonnegative")
    _check_normalized(sum(w), _is_exact(w), "weight vector")
    h, zeros = entropy(w)
    zeros += m - len(w)
    value = h / log(m)
    return DimensionResult(min(max(value, 0.0), 1.0), "bernoulli_entropy",
                           {"r": [str(v) for v in w], "m": m}, zeros)


def hd_markov(R) -> DimensionResult:
    """-sum_ij q_i q_ij ln q_ij / ln m from a joint matrix R.

    Raises NotPrimitiveError or MarginalMismatchError (an empty frequency
    set) through :class:`MarkovLaw`.
    """
    law = MarkovLaw(R)
    m = law.m
    # qQ = q
    for j in range(m):
        lhs = sum(law.q[i] * law.Q[i][j] for i in range(m))
        if (lhs != law.q[j]) if law.exact else abs(float(lhs) - float(law.q[j])) > 1e-12:
            raise InvalidLawError("q is not stationary for Q")
    terms, zeros = [], 0
    for i in range(m):
        for j in range(m):
            r = law.R[i][j]
            if r == 0:
                zeros += 1
                continue
            terms.append(-float(r) * _ln_ratio(r, law.q[i]))
    value = fsum(terms) / log(m)
    return DimensionResult(min(max(value, 0.0), 1.0), "markov_entropy",
                           {"R": [[str(v) for v in row] for row in law.R]}, zeros,
                           diagnostics={"q": [str(v) for v in law.q]})


# ---------------------------------------------------------------------------
# perturbation
# ---------------------------------------------------------------------------


@dataclass
class PerturbedVector:
    """A weight vector (or joint matrix) with its zero entries filled by delta.

    ``conditions_hold`` is the smallness condition on delta; ``inequality_holds``
    the resulting cross-entropy inequality, checked directly.  ``valid`` needs
    both.  ``noop`` marks inputs with no zero entry, which are returned as is.
    """

    original: object
    delta: object
    perturbed: object
    conditions_hold: bool
    inequality_holds: bool
    inequality_gap: float
    noop: bool
    hd_original: float
    hd_perturbed: float
    W_bound: float
    stationary: Optional[tuple] = None
    transition: Optional[tuple] = None

    @property
    def valid(self) -> bool:
        return self.conditions_hold and self.inequality_holds


def perturb_bernoulli(r: Sequence, delta) -> PerturbedVector:
    """r_j - delta/k on the k positive entries, delta/l on the l zero entries."""
    w = _vector(r)
    delta = Fraction(delta) if _is_exact(w) and not isinstance(delta, float) else float(delta)
    if not isinstance(delta, Fraction):
        w = tuple(float(v) for v in w)
    if delta <= 0:
        raise ValueError("delta must be positive")
    m = len(w)
    k = sum(1 for v in w if v > 0)
    l = m - k
    hd0 = hd_bernoulli(w).value
    if l == 0:
        h, _ = entropy(w)
        return PerturbedVector(w, delta, w, True, True, 0.0, True, hd0, hd0, h / log(m))
    big_enough = all(v > delta / k for v in w if v > 0)
    if not big_enough:
        return PerturbedVector(w, delta, None, False, False, float("nan"), False, hd0,
                               float("nan"), float("nan"))
    rd = tuple(v - delta / k if v > 0 else delta / l for v in w)
    cond = _ln(delta / l) <= fsum(_ln(v - delta / k) for v in w if v > 0) / k
    cross = fsum(float(a) * _ln(b) for a, b in zip(w, rd) if a > 0)
    self_ent = fsum(float(b) * _ln(b) for b in rd)
    gap = cross - self_ent
    h_rd, _ = entropy(rd)
    return PerturbedVector(w, delta, rd, bool(cond), gap >= -1e-12, gap, False, hd0,
                           h_rd / log(m), h_rd / log(m))


def perturb_markov(R, delta) -> PerturbedVector:
    """Row-wise fill of zero entries of R; Q^(delta) is then strictly positive.

    Row i loses delta/k_i on its k_i positive entries and gives delta/l_i to
    each of its l_i zero entries, so row sums q_i are kept.  Rows with no
    zero entry are unchanged.  Reports the stationary vector q^(delta) of
    Q^(delta), the dimension value of the perturbed chain, and the bound
    -sum r^(delta)_ij max(1, q^(delta)_i / q_i) ln q^(delta)_ij / ln m.
    """
    law = MarkovLaw(R)
    rows = law.R
    exact = law.exact and not isinstance(delta, float)
    delta = Fraction(delta) if exact else float(delta)
    if not exact:
        rows = tuple(tuple(float(v) for v in row) for row in rows)
    if delta <= 0:
        raise ValueError("delta must be positive")
    m = law.m
    q = law.q if exact else tuple(float(v) for v in law.q)
    hd0 = hd_markov(R).value
    if all(v > 0 for row in rows for v in row):
        Q = tuple(tuple(v / q[i] for v in rows[i]) for i in range(m))
        bound = -fsum(float(rows[i][j]) * _ln(Q[i][j]) for i in range(m) for j in range(m)) / log(m)
        return PerturbedVector(rows, delta, rows, True, True, 0.0, True, hd0, hd0, bound,
                               stationary=q, transition=Q)
    new_rows, cond = [], True
    for i, row in enumerate(rows):
        k = sum(1 for v in row if v > 0)
        l = m - k
        if l == 0:
            new_rows.append(row)
            continue
        if not all(v > delta / k for v in row if v > 0):
            return PerturbedVector(rows, delta, None, False, False, float("nan"), False, hd0,
                                   float("nan"), float("nan"))
        rhs = fsum(_ln_ratio(v - delta / k, q[i]) for v in row if v > 0) / k
        cond = cond and _ln(delta / l) <= rhs
        new_rows.append(tuple(v - delta / k if v > 0 else delta / l for v in row))
    Rd = tuple(new_rows)
    Qd = tuple(tuple(v / q[i] for v in Rd[i]) for i in range(m))
    lnQ = [[_ln(Qd[i][j]) for j in range(m)] for i in range(m)]
    cross = fsum(float(rows[i][j]) * lnQ[i][j] for i in range(m) for j in range(m) if rows[i][j] > 0)
    self_ent = fsum(float(Rd[i][j]) * lnQ[i][j] for i in range(m) for j in range(m))
    gap = cross - self_ent
    qd = stationary_vector(Qd)
    hd_pert = hd_markov([[qd[i] * Qd[i][j] for j in range(m)] for i in range(m)]).value
    W = -fsum(float(Rd[i][j]) * max(1.0, float(qd[i]) / float(q[i])) * lnQ[i][j]
              for i in range(m) for j in range(m)) / log(m)
    return PerturbedVector(rows, delta, Rd, bool(cond), gap >= -1e-12, gap, False, hd0,
                           hd_pert, W, stationary=tuple(qd), transition=Qd)


# ---------------------------------------------------------------------------
# local dimension
# ---------------------------------------------------------------------------


@dataclass
class LocalDimensionTrace:
    """-ln mass(I_n(x)) / (n ln m) on a grid of n.

    ``values`` stops at the first null cylinder; ``null_at`` records that n.
    """

    n: list
    values: list
    null_at: Optional[int] = None

    @property
    def endpoint(self) -> float:
        return self.values[-1] if self.values else float("nan")


def _grouped_logs(weights) -> tuple:
    """Map each symbol to a group of equal weights; ln of each group weight."""
    groups: dict = {}
    ids = []
    for w in weights:
        if w not in groups:
            groups[w] = len(groups)
        ids.append(groups[w])
    logs = np.array([(_ln(w) if w != 0 else -np.inf) for w in groups])
    return np.asarray(ids, dtype=np.int64), logs


def local_dimension_trace(law, stream: DigitStream, n_grid: Sequence[int]) -> LocalDimensionTrace:
    """Evaluate the cylinder-mass ratio of ``stream`` under ``law`` along ``n_grid``."""
    n_grid = sorted(int(n) for n in n_grid)
    if not n_grid or n_grid[0] < 1:
        raise ValueError("n grid must contain positive integers")
    n_max = n_grid[-1]
    digits = np.asarray(stream.prefix(n_max), dtype=np.int64)
    if isinstance(law, MarkovLaw):
        m = law.m
        flat = [law.Q[i][j] for i in range(m) for j in range(m)]
        ids, logs = _grouped_logs(flat)
        sym = ids[digits[:-1] * m + digits[1:]]
        # transitions inside I_n: n - 1 of them
        base = _ln(law.q[digits[0]]) if law.q[digits[0]] != 0 else -np.inf
        offset = 1
    else:
        m = law.m
        ids, logs = _grouped_logs(law.weights)
        sym = ids[digits - law.offset]
        base = 0.0
        offset = 0
    onehot = np.zeros((len(sym) + 1, len(logs)), dtype=np.int64)
    onehot[np.arange(1, len(sym) + 1), sym] = 1
    counts = np.cumsum(onehot, axis=0)
    zero_group = np.flatnonzero(np.isinf(logs))
    lm = log(m)
    values, null_at = [], None
    for n in n_grid:
        c = counts[n - offset]
        if base == -np.inf or (zero_group.size and c[zero_group].sum() > 0):
            null_at = n
            values.append(float("-inf"))
            break
        finite = np.isfinite(logs)
        logmass = base + fsum(int(cc) * lg for cc, lg in zip(c[finite], logs[finite]))
        values.append(-logmass / (n * lm) + 0.0)
    return LocalDimensionTrace(n_grid[: len(values)], values, null_at)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def construct_up_point(weights, mode: str = "iid", seed: int = 0,
                       count: Optional[int] = None) -> DigitStream:
    """A typical point for prescribed digit frequencies.

    ``iid``: base-m digits drawn from ``weights``.  ``truncated-cf``: CF digit
    k drawn from the positive truncation of ``weights`` to {1..k}, so a_k <= k.
    """
    if mode == "iid":
        return sample_stream(BernoulliLaw(weights), seed, count)
    if mode in ("truncated-cf", "truncated_cf"):
        return sample_stream(TruncatedCFLaw(weights), seed, count)
    raise ValueError(f"unknown construction mode {mode!r}")


@dataclass
class GzbConstruction:
    stream: DigitStream
    insertions: list  # (index, digit)


def _inserted_digit(b: Fraction, k: int) -> int:
    lo = b ** (k * k)
    hi = 2 * lo
    mid = lo * Fraction(3, 2)
    d = -((-mid.numerator) // mid.denominator)  # ceil
    if not lo < d < hi:
        d = lo.numerator // lo.denominator + 1
    if not lo < d < hi:
        raise ValueError(f"no integer strictly between {lo} and {hi}")
    return d


def construct_gzb(z: DigitStream, b, schedule: Schedule, k_max: int) -> GzbConstruction:
    """Copy of z with a huge digit in (b^(k^2), 2 b^(k^2)) at index k^2 + m(k).

    m(k) is the least integer in [0, l] avoiding every q_i(k).  The digit is
    ceil(3/2 b^(k^2)), or floor(b^(k^2)) + 1 when that midpoint is not
    strictly inside the interval.
    """
    b = Fraction(str(b)) if isinstance(b, float) else Fraction(b)
    if b <= 1:
        raise ValueError("b must exceed 1")
    if z.alphabet is not None:
        raise ValueError("G_z(b) acts on continued-fraction streams")
    out = []
    for k in range(1, k_max + 1):
        taken = {schedule(i, k) for i in range(1, schedule.ell + 1)}
        mk = next(j for j in range(schedule.ell + 1) if k * k + j not in taken)
        out.append((k * k + mk, _inserted_digit(b, k)))
    if not out:
        return GzbConstruction(z, [])
    return GzbConstruction(z.patched(dict(out)), out)


# ---------------------------------------------------------------------------
# continued-fraction certificate
# ---------------------------------------------------------------------------


@dataclass
class CFCertificate:
    """Lower-bound witness max(1/2, h / lambda_hat) for one digit measure."""

    entropy: float
    lyapunov: float
    stderr: float
    n: int
    seeds: list
    estimates: list
    certificate: float
    structural_lower: float = 0.5
    insufficient_n: bool = False

    def as_dimension(self) -> DimensionResult:
        return DimensionResult(self.certificate, "cf_lower_certificate",
                               {"n": self.n, "seeds": len(self.seeds)},
                               interval=(self.certificate, 1.0),
                               diagnostics={"entropy": self.entropy, "lyapunov": self.lyapunov,
                                            "stderr": self.stderr,
                                            "insufficient_n": self.insufficient_n})


def _ln_int(q: int) -> float:
    return math.log(q)


def cf_bound_certificate(law: BernoulliLaw, seeds: Sequence[int] = (0,),
                         n: int = 10_000) -> CFCertificate:
    """Entropy h = -sum r ln r and lambda_hat = (2/n) ln q_n from exact continuants.

    Flags ``insufficient_n`` when the across-seed standard error exceeds 1%
    of lambda_hat.
    """
    if law.offset != 1:
        raise ValueError("the certificate needs a law on CF digits (offset 1)")
    h, _ = entropy(law.weights)
    seeds = list(seeds)
    ests = []
    for s in seeds:
        digits = sample_stream(law, s).prefix(n).tolist()
        ests.append(2.0 * _ln_int(last_continuant(digits)) / n)
    lam = fsum(ests) / len(ests)
    se = float(np.std(ests, ddof=1) / math.sqrt(len(ests))) if len(ests) > 1 else 0.0
    ratio = h / lam if lam > 0 else float("inf")
    return CFCertificate(h, lam, se, n, seeds, ests, max(0.5, ratio),
                         insufficient_n=bool(se > 0.01 * lam))
