"""Dense matrix kernels and a portable seeded generator.

A *matrix* here is a 2-D, C-contiguous ``float64`` numpy array with rows as
samples. Public operations return new arrays and never modify their inputs.

The random generator is SplitMix64 (Steele, Lea & Flood, 2014)::

    state  <- state + 0x9E3779B97F4A7C15            (mod 2**64)
    z      <- state
    z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2**64)
    z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB   (mod 2**64)
    output <- z ^ (z >> 31)

Uniform doubles take the top 53 bits of an output, scaled by 2**-53, so they
lie in [0, 1). Bounded integers use Lemire's multiply-shift with rejection.
Everything is integer arithmetic, so streams are bit-identical on every
platform.
"""
import math

import numpy as np

from .errors import ArgumentError, NumericDivergenceError, ShapeError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB
_TWO_POW_M53 = 1.0 / (1 << 53)


def as_matrix(values, name="matrix"):
    """Coerce ``values`` to a finite 2-D float64 matrix (copying)."""
    m = np.array(values, dtype=np.float64, order="C", copy=True)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and column, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ArgumentError(f"{name} contains non-finite entries")
    return m


def _check_finite(result, op):
    if not np.isfinite(result).all():
        raise NumericDivergenceError(f"{op} produced non-finite values")
    return result


def matmul(a, b):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    return _check_finite(out, "matmul")


def add_row_broadcast(m, bias):
    """Add the 1 x cols ``bias`` row to every row of ``m``."""
    if bias.ndim != 2 or bias.shape[0] != 1 or m.ndim != 2 or bias.shape[1] != m.shape[1]:
        raise ShapeError(f"bias shape {bias.shape} does not broadcast over {m.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = m + bias
    return _check_finite(out, "add_row_broadcast")


def splitmix64_mix(z):
    z = ((z ^ (z >> 30)) * MIX_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_2) & MASK64
    return z ^ (z >> 31)


def derive_seed(*parts):
    """Hash a base seed and integer indices into an independent child seed."""
    s = 0
    for p in parts:
        s = splitmix64_mix((s + GOLDEN_GAMMA + (int(p) & MASK64)) & MASK64)
    return s


class Rng:
    """SplitMix64 stream. Single-owner; derive child seeds for parallel work."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return splitmix64_mix(self.state)

    def random(self):
        return (self.next_u64() >> 11) * _TWO_POW_M53

    def uniform(self, lo, hi):
        if not lo < hi:
            raise ArgumentError(f"uniform requires lo < hi, got lo={lo}, hi={hi}")
        x = lo + (hi - lo) * self.random()
        # rounding can land exactly on hi for wide intervals
        return x if x < hi else math.nextafter(hi, lo)

    def below(self, n):
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ArgumentError(f"below requires n >= 1, got {n}")
        m = self.next_u64() * n
        low = m & MASK64
        if low < n:
            threshold = ((1 << 64) - n) % n
            while low < threshold:
                m = self.next_u64() * n
                low = m & MASK64
        return m >> 64

    def normal(self):
        """Standard normal via Box-Muller (cosine branch only)."""
        u1 = self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``, as an int64 array."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return np.array(perm, dtype=np.int64)
