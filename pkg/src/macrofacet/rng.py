"""Counter-based deterministic random streams.

Every value is a pure hash of (seed, stream, counter), so the sequence a
consumer sees depends only on its own draw count, never on scheduling or
thread layout. The hash is the SplitMix64 output function over a Weyl
sequence; distinct streams land at independently mixed positions of the
underlying length-2^64 sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53
_TWO_PI = 6.283185307179586


def _mix(z):
    # SplitMix64 finalizer; z is a uint64 array
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def stream_base(seed, stream):
    """Avalanche-mixed base state for (seed, stream)."""
    seed = np.asarray(seed, dtype=np.uint64)
    stream = np.asarray(stream, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(_mix(seed * _GOLDEN + _U64(1)) ^ (stream * _MIX2 + _U64(1)))


def raw_u64(base, counter):
    """k-th SplitMix64 output starting from base."""
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(base + counter * _GOLDEN)


def uniform_from(base, counter):
    """Uniform in [0, 1) with 53 random bits, given base state and counter."""
    return (raw_u64(base, counter) >> _U64(11)).astype(np.float64) * _INV_2_53


def derive_bases(seed, stream, indices):
    """Vectorized base states of the child streams RandomStream.derive(i)."""
    with np.errstate(over="ignore"):
        child = _mix(
            np.asarray(stream, dtype=np.uint64) * _GOLDEN
            ^ np.asarray(indices, dtype=np.uint64) * _MIX1 + _U64(1)
        )
    return stream_base(seed, child)


@dataclass
class RandomStream:
    """Single-owner stream of (seed, stream_id); reproducible across runs.

    Draw methods advance an internal counter; independent streams never
    interact, so one stream per pixel / realization / worker is the whole
    concurrency contract.
    """

    seed: int
    stream: int = 0
    counter: int = 0
    _base: np.uint64 = field(init=False, repr=False)

    def __post_init__(self):
        self._base = stream_base(self.seed, self.stream)

    def uniform(self, shape=None):
        n = 1 if shape is None else int(np.prod(shape))
        counters = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        u = uniform_from(self._base, counters)
        if shape is None:
            return float(u[0])
        return u.reshape(shape)

    def normal(self, shape=None):
        # Box-Muller; consumes exactly two uniforms per pair
        n = 1 if shape is None else int(np.prod(shape))
        m = (n + 1) // 2
        u1 = self.uniform((m,))
        u2 = self.uniform((m,))
        r = np.sqrt(-2.0 * np.log1p(-u1))
        z = np.concatenate([r * np.cos(_TWO_PI * u2), r * np.sin(_TWO_PI * u2)])[:n]
        if shape is None:
            return float(z[0])
        return z.reshape(shape)

    def derive(self, index):
        """Independent child stream keyed by index (for sub-tasks)."""
        with np.errstate(over="ignore"):
            child = int(
                _mix(
                    np.asarray(self.stream, dtype=np.uint64) * _GOLDEN
                    ^ np.asarray(index, dtype=np.uint64) * _MIX1 + _U64(1)
                )
            )
        return RandomStream(self.seed, child)

