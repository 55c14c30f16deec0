"""Counter-based uniforms keyed by (seed, stream id, index).

Every digit of a generated stream is drawn from its own uniform, so any
index can be read in any order, by any worker, and still get the same value.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM_MIX = 0xD1B54A32D192ED03
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _mix_int(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def stream_key(seed: int, stream: int = 0) -> int:
    """64-bit key for one (seed, stream id) pair."""
    return _mix_int(_mix_int(seed & _MASK64) ^ ((stream * _STREAM_MIX) & _MASK64))


def raw_bits(key: int, indices) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (idx + np.uint64(1)) * _GOLDEN
        return _mix(z)


def uniforms(key: int, indices) -> np.ndarray:
    """Uniforms in the open interval (0, 1), one per index."""
    bits = raw_bits(key, indices) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)
