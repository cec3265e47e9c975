"""Model parameters, derived rate constants, and group decomposition.

A cascade of N processors is described by tick rates lambda_1..lambda_N
and message rates beta_{1,2}..beta_{N-1,N} (processor j messages only
its right neighbour j+1).  Validation derives the two constants the
embedded chain needs on every step:

* ``z``      -- total event rate, sum of all tick and message rates;
* ``b[q]``   -- per-position probability that processor q's next tick
  fires before any q->q+1 message while it sits at one local-time
  value, ``lambda_q / (lambda_q + beta_{q,q+1})``.  This is the stop
  probability of the rollback cascade scan; its complement is the
  probability that a position carries at least one message.  By
  convention ``b[N-1] = 0`` (the last processor sends nothing).

The group decomposition predicts long-run speeds: with pairwise
distinct tick rates, the prefix-minimum function ell(m) = min_{i<=m}
lambda_i is constant on contiguous groups, and every processor in a
group is conjectured (proved for groups of size <= 3) to advance at
its group's ell value.
"""

import math
from dataclasses import dataclass

from .errors import (
    DegenerateLevels,
    IndexOutOfRange,
    LengthMismatch,
    NegativeBeta,
    NonPositiveLambda,
)


@dataclass(frozen=True)
class CascadeParams:
    """Validated cascade model rates plus derived constants.

    Immutable after construction; safe to share across concurrent
    replicas.  Construct through :func:`validate_params`.
    """

    n: int
    lambdas: tuple
    betas: tuple
    z: float
    b: tuple


@dataclass(frozen=True)
class GroupPartition:
    """Contiguous processor groups sharing a predicted speed.

    ``boundaries`` is the increasing sequence j_1=1 < ... < j_{K+1}=N+1
    of group starts (1-based, with the terminating sentinel N+1);
    ``groups`` holds the K index tuples; ``predicted_speeds[j-1]`` is
    the prefix-minimum rate for processor j.
    """

    boundaries: tuple
    groups: tuple
    predicted_speeds: tuple


def validate_params(n, lambdas, betas):
    """Validate rates and derive z and b.

    Raises NonPositiveLambda, NegativeBeta, or LengthMismatch.  A
    single-processor model (n=1, no betas) is accepted; operations on
    relative coordinates require n >= 2 and reject it themselves.
    """
    n = int(n)
    if n < 1:
        raise LengthMismatch(f"processor count must be >= 1, got {n}")
    lambdas = tuple(float(v) for v in lambdas)
    betas = tuple(float(v) for v in betas)
    if len(lambdas) != n:
        raise LengthMismatch(f"expected {n} tick rates, got {len(lambdas)}")
    if len(betas) != n - 1:
        raise LengthMismatch(f"expected {n - 1} message rates, got {len(betas)}")
    for v in lambdas:
        if not (v > 0.0) or not math.isfinite(v):
            raise NonPositiveLambda(f"tick rates must be positive finite, got {v}")
    for v in betas:
        if v < 0.0 or not math.isfinite(v):
            raise NegativeBeta(f"message rates must be nonnegative finite, got {v}")
    z = sum(lambdas) + sum(betas)
    b = tuple(lambdas[q] / (lambdas[q] + betas[q]) for q in range(n - 1)) + (0.0,)
    return CascadeParams(n=n, lambdas=lambdas, betas=betas, z=z, b=b)


def rescale(params, c):
    """Uniform time rescale: multiply every rate by c > 0.

    Performance characteristics scale by c; the group partition and the
    embedded chain's transition probabilities are unchanged.
    """
    if not (c > 0.0) or not math.isfinite(c):
        raise NonPositiveLambda(f"rescale factor must be positive finite, got {c}")
    return validate_params(
        params.n,
        tuple(v * c for v in params.lambdas),
        tuple(v * c for v in params.betas),
    )


def normalize_rates(params):
    """Rescale so the total event rate z equals 1."""
    return rescale(params, 1.0 / params.z)


def with_barriers(params, positions):
    """Copy of params with the message rate zeroed at each barrier.

    ``positions`` holds 1-based sender indices i in 1..N-1; position i
    zeroes the i -> i+1 rate, splitting the cascade into independently
    evolving segments.
    """
    positions = set(int(i) for i in positions)
    for i in positions:
        if not 1 <= i <= params.n - 1:
            raise IndexOutOfRange(
                f"barrier position {i} outside 1..{params.n - 1}")
    betas = tuple(0.0 if (q + 1) in positions else v
                  for q, v in enumerate(params.betas))
    return validate_params(params.n, params.lambdas, betas)


def level_function(params):
    """Prefix-minimum rates ell(1..N): ell(m) = min of the first m lambdas."""
    out = []
    cur = math.inf
    for v in params.lambdas:
        cur = min(cur, v)
        out.append(cur)
    return tuple(out)


def decompose_groups(params):
    """Partition processors into contiguous groups by level sets of ell.

    Requires pairwise distinct tick rates (DegenerateLevels otherwise);
    with ties the level sets still exist but the speed conjecture is
    not stated for them, so prediction refuses.
    """
    if len(set(params.lambdas)) != params.n:
        raise DegenerateLevels("tick rates must be pairwise distinct")
    levels = level_function(params)
    boundaries = [1]
    for j in range(1, params.n):
        if levels[j] < levels[j - 1]:
            boundaries.append(j + 1)
    boundaries.append(params.n + 1)
    groups = tuple(
        tuple(range(boundaries[k], boundaries[k + 1]))
        for k in range(len(boundaries) - 1)
    )
    return GroupPartition(
        boundaries=tuple(boundaries),
        groups=groups,
        predicted_speeds=levels,
    )
