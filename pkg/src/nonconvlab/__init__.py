"""Nonconventional strong laws and digit-frequency dimensions, computed exactly where possible."""

__version__ = "0.1.0"

from .digitkit import DigitStream, continuants, expand_cf, expand_rational  # noqa: E402
from .measures import (  # noqa: E402
    BernoulliLaw,
    FiniteMarkovChain,
    GaussMarginalLaw,
    MarkovLaw,
    TruncatedCFLaw,
    sample_stream,
)
from .observables import Observable, decompose, mean_F  # noqa: E402
from .schedules import Schedule, validate  # noqa: E402

__all__ = [
    "BernoulliLaw",
    "DigitStream",
    "FiniteMarkovChain",
    "GaussMarginalLaw",
    "MarkovLaw",
    "Observable",
    "Schedule",
    "TruncatedCFLaw",
    "__version__",
    "continuants",
    "decompose",
    "expand_cf",
    "expand_rational",
    "mean_F",
    "sample_stream",
    "validate",
]
