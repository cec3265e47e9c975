"""Seedable, platform-independent random number generator.

The whole package draws randomness from one documented algorithm:
xoshiro256++ (Blackman & Vigna), with its 256-bit state filled by
successive outputs of the SplitMix64 mixer.  Replica ``k`` of an
experiment seeded with ``seed`` uses the stream

    z0 = (seed XOR (k * 0x9E3779B97F4A7C15)) mod 2^64
    state[i] = splitmix64 output i+1 starting from z0,  i = 0..3

so runs are reproducible bit-for-bit on any platform, with or without
numba, and replicas never share a stream.  State is a 4-element uint64
array owned by the caller; every draw mutates it in place.

Uniform doubles are ``(x >> 11) * 2^-53`` in ``[0, 1)``.
"""

import math

import numpy as np

from ._accel import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 1.0 / float(1 << 53)


@njit
def _splitmix64_next(z):
    z = z + _GOLDEN
    w = z
    w = (w ^ (w >> np.uint64(30))) * _MIX1
    w = (w ^ (w >> np.uint64(27))) * _MIX2
    w = w ^ (w >> np.uint64(31))
    return z, w


@njit
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit
def _fill_state(state, seed, stream):
    z = seed ^ (stream * _GOLDEN)
    for i in range(4):
        z, w = _splitmix64_next(z)
        state[i] = w


def make_state(seed, stream=0):
    """Return a fresh xoshiro256++ state for (seed, stream)."""
    state = np.empty(4, dtype=np.uint64)
    _fill_state(state, np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF),
                np.uint64(int(stream) & 0xFFFFFFFFFFFFFFFF))
    return state


@njit
def next_u64(state):
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    result = _rotl(s0 + s3, 23) + s0
    t = s1 << np.uint64(17)
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = _rotl(s3, 45)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return result


@njit
def uniform(state):
    """Uniform double in [0, 1)."""
    return float(next_u64(state) >> np.uint64(11)) * _U53


@njit
def exponential(state, rate):
    """Exponential variate with the given rate (mean 1/rate)."""
    u = uniform(state)
    return -math.log1p(-u) / rate


@njit
def geometric_failures(state, p_fail):
    """Number of consecutive failures before the first success.

    Success probability is ``1 - p_fail`` per trial; ``p_fail`` must lie
    strictly in (0, 1).  Returns g >= 0 with P(g = k) = p_fail^k * (1 - p_fail).
    """
    u = uniform(state)
    return int(math.log1p(-u) / math.log(p_fail))
