"""Portable, counter-based random number generation.

The generator is SplitMix64 used in counter mode: output ``i`` of a stream
with seed ``s`` is ``mix64(s + (i + 1) * GOLDEN)`` where all arithmetic is
modulo 2**64 and ``mix64`` is the standard SplitMix64 finalizer
(xor-shift 30, multiply, xor-shift 27, multiply, xor-shift 31).  The state
is just ``(seed, counter)``, so identical seeds reproduce identical streams
on any platform and in any implementation of this scheme.

Uniform doubles take the top 53 bits of an output: ``(x >> 11) * 2**-53``,
giving values in [0, 1).

Standard normals use the Box-Muller transform.  Normals are produced in
pairs from two consecutive outputs ``(x, y)``:

    u1 = ((x >> 11) + 1) * 2**-53        # in (0, 1], log-safe
    u2 = (y >> 11) * 2**-53              # in [0, 1)
    r  = sqrt(-2 ln u1)
    z0 = r cos(2 pi u2),  z1 = r sin(2 pi u2)

A request for n normals consumes ceil(n/2) pairs (2*ceil(n/2) counter
steps) and returns the first n values of the interleaved sequence
z0_0, z1_0, z0_1, z1_1, ...  This makes the stream position after any
sequence of draws a pure function of the request sizes.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = float(2.0**-53)

# FNV-1a 64-bit, used to hash stream labels for spawn().
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _U64_MASK
    return h


def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = z ^ (z >> np.uint64(30))
        z = z * _MIX1
        z = z ^ (z >> np.uint64(27))
        z = z * _MIX2
        return z ^ (z >> np.uint64(31))


class SplitMix64(object):
    """Counter-based SplitMix64 stream of uniforms and standard normals.

    Parameters
    ----------
    seed : int
        Stream seed, reduced modulo 2**64.
    counter : int, optional
        Starting position, for resuming a stream mid-way.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _U64_MASK
        self.counter = int(counter)

    def __repr__(self):
        return f"SplitMix64(seed={self.seed}, counter={self.counter})"

    def copy(self) -> "SplitMix64":
        return SplitMix64(self.seed, self.counter)

    def spawn(self, label: str) -> "SplitMix64":
        """Derive an independent child stream from a text label.

        The child seed is ``mix64(seed XOR fnv1a64(label))``; the parent
        stream position is not consumed, so spawning is order-free and
        the same (seed, label) pair always yields the same child.
        """
        mixed = np.uint64(self.seed ^ fnv1a64(label.encode("utf-8")))
        with np.errstate(over="ignore"):
            return SplitMix64(int(_mix64(mixed + _GOLDEN)))

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return _mix64(np.uint64(self.seed) + idx * _GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform on [0, 1)."""
        if n < 0:
            raise ValueError("draw count must be non-negative")
        return (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, n: int) -> np.ndarray:
        """n standard-normal doubles via Box-Muller (see module docstring)."""
        if n < 0:
            raise ValueError("draw count must be non-negative")
        if n == 0:
            return np.empty(0, dtype=np.float64)
        pairs = (n + 1) // 2
        raw = self._raw(2 * pairs)
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def normal_matrix(self, shape: tuple[int, ...]) -> np.ndarray:
        """Standard normals filled in row-major order."""
        size = int(np.prod(shape)) if shape else 1
        return self.normal(size).reshape(shape)

    def integers(self, n: int, bound: int) -> np.ndarray:
        """n integers uniform on [0, bound) via 53-bit doubles.

        Bias is below 2**-53 per draw for the bounds used here (dataset
        sizes), which is acceptable for sampling work.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        return np.minimum((self.uniform(n) * bound).astype(np.int64), bound - 1)

    def shuffled(self, items: np.ndarray) -> np.ndarray:
        """Return a Fisher-Yates shuffled copy of a 1-D array."""
        out = np.array(items)
        n = len(out)
        if n <= 1:
            return out
        # draw all swap indices up front so consumption is deterministic
        u = self.uniform(n - 1)
        for i in range(n - 1, 0, -1):
            j = min(int(u[n - 1 - i] * (i + 1)), i)
            out[i], out[j] = out[j], out[i]
        return out

    def choice(self, items: np.ndarray, k: int) -> np.ndarray:
        """k items drawn without replacement, uniformly."""
        items = np.asarray(items)
        if k > len(items):
            raise ValueError(f"cannot choose {k} from {len(items)} items")
        return self.shuffled(items)[:k]


def ensure_rng(value) -> SplitMix64:
    """Coerce an int seed or SplitMix64 instance to a SplitMix64."""
    if isinstance(value, SplitMix64):
        return value
    if value is None:
        return SplitMix64(0)
    return SplitMix64(int(value))
