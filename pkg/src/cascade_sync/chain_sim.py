"""Fast simulation of the embedded chain via the exact kernel.

Each step picks an event category (tick or message) and, for an
effective message, samples the rollback cascade directly: at every
level the offset of the lowest message-carrying position is geometric
with per-position stop probability b_q, truncated by the scan cap;
drawing an offset beyond the cap stops the cascade, which reproduces
the kernel's telescoping stop mass exactly with one uniform per level.

Model time advances 1/z per step by default (the expected inter-event
gap; lower variance for speed ratios) or by sampled exponential gaps
when ``exact_gaps`` is set.  Replicas are independent streams derived
from (seed, replica_index) and may run concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from ._accel import njit
from .errors import LengthMismatch, NonPositiveHorizon


@njit
def _step(lam_cum_z, bet, b, z, n, x, state):
    """Advance the chain one step in place."""
    r = _rng.uniform(state) * z
    c = 0
    ncat = lam_cum_z.shape[0]
    while c < ncat - 1 and r >= lam_cum_z[c]:
        c += 1
    if c < n:
        x[c] += 1
        return
    q = c - n
    if x[q + 1] <= x[q]:
        return
    target = x[q]
    m = q + 1
    while True:
        old = x[m]
        x[m] = target
        if m == n - 1:
            return
        top = min(old, x[m + 1] - 1)
        if top < target:
            return
        bm = b[m]
        if bm >= 1.0:
            return
        v = target + _rng.geometric_failures(state, bm)
        if v > top:
            return
        target = v
        m += 1


@njit
def _cumulative_rates(lam, bet):
    n = lam.shape[0]
    ncat = n + bet.shape[0]
    cum = np.empty(ncat, np.float64)
    acc = 0.0
    for k in range(n):
        acc += lam[k]
        cum[k] = acc
    for q in range(bet.shape[0]):
        acc += bet[q]
        cum[n + q] = acc
    return cum


@njit
def _run_steps(lam, bet, b, z, steps, x, state, exact_gaps):
    cum = _cumulative_rates(lam, bet)
    n = lam.shape[0]
    elapsed = 0.0
    for _ in range(steps):
        _step(cum, bet, b, z, n, x, state)
        if exact_gaps:
            elapsed += _rng.exponential(state, z)
    if not exact_gaps:
        elapsed = steps / z
    return elapsed


@njit
def _run_occupation(lam, bet, b, z, steps, radius, x, state):
    cum = _cumulative_rates(lam, bet)
    n = lam.shape[0]
    inside = 0
    excursion = 0
    for _ in range(steps):
        _step(cum, bet, b, z, n, x, state)
        m = 0
        for j in range(1, n):
            d = x[j] - x[0]
            if d < 0:
                d = -d
            if d > m:
                m = d
        if m <= radius:
            inside += 1
        if m > excursion:
            excursion = m
    return inside, excursion


@dataclass(frozen=True)
class SpeedReport:
    """Per-processor speed estimates across independent replicas.

    ``v_hat[j]`` averages the per-replica speeds (x_j at end - x_j at
    start) / elapsed model time; ``ci_half_width`` is the 95% normal
    approximation across replica means (NaN with a single replica).
    """

    v_hat: tuple
    ci_half_width: tuple
    replicas: int
    steps: int
    elapsed_model_time: tuple
    seed: int


def estimate_speeds(params, steps, replicas, seed, exact_gaps=False, burn_in=0):
    """Estimate long-run speeds from `replicas` embedded-chain runs."""
    steps = int(steps)
    replicas = int(replicas)
    if steps < 1 or replicas < 1:
        raise ValueError("steps and replicas must be >= 1")
    burn_in = int(burn_in)
    lam = np.asarray(params.lambdas, dtype=np.float64)
    bet = np.asarray(params.betas, dtype=np.float64)
    b = np.asarray(params.b, dtype=np.float64)
    speeds = np.empty((replicas, params.n), dtype=np.float64)
    elapsed_all = []
    for k in range(replicas):
        state = _rng.make_state(seed, k)
        x = np.zeros(params.n, dtype=np.int64)
        if burn_in > 0:
            _run_steps(lam, bet, b, params.z, burn_in, x, state, False)
        x0 = x.copy()
        elapsed = _run_steps(lam, bet, b, params.z, steps, x, state, exact_gaps)
        speeds[k] = (x - x0) / elapsed
        elapsed_all.append(float(elapsed))
    v_hat = speeds.mean(axis=0)
    if replicas >= 2:
        ci = 1.96 * speeds.std(axis=0, ddof=1) / math.sqrt(replicas)
    else:
        ci = np.full(params.n, math.nan)
    return SpeedReport(
        v_hat=tuple(float(v) for v in v_hat),
        ci_half_width=tuple(float(v) for v in ci),
        replicas=replicas,
        steps=steps,
        elapsed_model_time=tuple(elapsed_all),
        seed=int(seed),
    )


@dataclass(frozen=True)
class OccupationStats:
    """Recurrence diagnostics of the relative chain."""

    occupancy_fraction: float
    max_excursion: int
    final_y: tuple
    steps: int
    radius: float


def occupation_stats(params, steps, radius, seed):
    """Fraction of steps with max_j |y_j| <= radius, plus the extremes."""
    if params.n < 2:
        raise LengthMismatch("relative coordinates need at least 2 processors")
    steps = int(steps)
    radius = float(radius)
    if radius <= 0.0:
        raise NonPositiveHorizon(f"radius must be positive, got {radius}")
    lam = np.asarray(params.lambdas, dtype=np.float64)
    bet = np.asarray(params.betas, dtype=np.float64)
    b = np.asarray(params.b, dtype=np.float64)
    x = np.zeros(params.n, dtype=np.int64)
    if steps == 0:
        return OccupationStats(1.0, 0, (0,) * (params.n - 1), 0, radius)
    state = _rng.make_state(seed)
    inside, excursion = _run_occupation(
        lam, bet, b, params.z, steps, radius, x, state)
    y = tuple(int(x[j] - x[0]) for j in range(1, params.n))
    return OccupationStats(
        occupancy_fraction=inside / steps,
        max_excursion=int(excursion),
        final_y=y,
        steps=steps,
        radius=radius,
    )
