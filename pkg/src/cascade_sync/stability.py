"""Ergodicity/transience checkers and the monotone coupling harness.

The drift criteria are verified on finite truncations: a pass means
"verified on the examined radius", never a proof.  The checkers compute
exact one-step drifts from the enumerated kernel, so the only
approximation is the truncation itself; the homogeneity of norm-like
test functions and the translation invariance of the kernel away from
the axes are what make a finite window meaningful.

The coupling realizes stochastic dominance constructively: both models
share every tick clock, messages are generated at the larger rates, and
each message is kept for the smaller-rate model independently with
probability beta_lo/beta_hi.  The smaller-rate model then rolls back
less often, so its local times should dominate at every event time; the
harness counts violations (expected: none).
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import rng as _rng
from ._accel import njit
from .errors import (
    AssumptionViolated,
    LengthMismatch,
    NonPositiveHorizon,
    ParamMismatch,
)
from .event_sim import _cascade, _log_append, _prune_logs
from .kernel import FREE, relative_transitions
from .model import with_barriers  # noqa: F401  (re-exported: barrier helper)


def mean_jump(params, y):
    """Full and free-part mean jump vectors of the relative chain at y."""
    y = tuple(int(v) for v in y)
    tl = relative_transitions(params, y)
    dim = params.n - 1
    full = np.zeros(dim)
    free = np.zeros(dim)
    for e in tl.entries:
        step = np.array([e.target[i] - y[i] for i in range(dim)], dtype=float)
        full += e.prob * step
        if e.kind == FREE:
            free += e.prob * step
    return full, free


@dataclass(frozen=True)
class DriftCheckResult:
    """Outcome of a truncated drift-criterion check."""

    criterion: str
    domain_size: int
    worst_drift: float
    finite_set_size: int
    finite_set_sup: float
    finite_set_max_f: float
    verdict: bool
    radius: float
    inner_radius: float = None
    witness: bool = None


def _box_points(bound, dim):
    rng = range(-bound, bound + 1)
    return product(*([rng] * dim))


def _boundary_min(f, bound, dim):
    worst = math.inf
    for point in _box_points(bound, dim):
        if max(abs(c) for c in point) == bound:
            worst = min(worst, f(point))
    return worst


def foster_check(params, f, radius, inner_radius=None):
    """Exact drift of f on {f <= radius} (optionally {inner < f <= radius}).

    The examined box is grown until its boundary lies strictly above the
    radius, which bounds the level set for norm-like test functions.
    The finite exception set A collects the states with nonnegative
    drift; the check passes when drift is negative everywhere else,
    E[f(next)] is finite on A, and A keeps clear of the truncation
    boundary (max f on A at most half the radius) so the verdict is not
    an artifact of the window.
    """
    if params.n < 2:
        raise LengthMismatch("relative coordinates need at least 2 processors")
    radius = float(radius)
    dim = params.n - 1
    bound = 4
    while _boundary_min(f, bound, dim) <= radius:
        bound *= 2
        if bound > (1 << 21):
            raise ValueError("test function does not grow past the radius")
    lo = -math.inf if inner_radius is None else float(inner_radius)
    domain_size = 0
    worst = -math.inf
    finite_set_size = 0
    finite_sup = -math.inf
    finite_max_f = -math.inf
    for point in _box_points(bound, dim):
        fy = f(point)
        if not lo < fy <= radius:
            continue
        domain_size += 1
        tl = relative_transitions(params, point)
        drift = 0.0
        expect = tl.self_loop * fy
        for e in tl.entries:
            fz = f(e.target)
            drift += e.prob * (fz - fy)
            expect += e.prob * fz
        if drift >= 0.0:
            finite_set_size += 1
            finite_sup = max(finite_sup, expect)
            finite_max_f = max(finite_max_f, fy)
        else:
            worst = max(worst, drift)
    clear_of_boundary = finite_set_size == 0 or finite_max_f <= 0.5 * radius
    verdict = (
        domain_size > finite_set_size
        and worst < 0.0
        and (finite_set_size == 0 or math.isfinite(finite_sup))
        and clear_of_boundary
    )
    return DriftCheckResult(
        criterion="foster",
        domain_size=domain_size,
        worst_drift=worst,
        finite_set_size=finite_set_size,
        finite_set_sup=finite_sup,
        finite_set_max_f=finite_max_f,
        verdict=verdict,
        radius=radius,
        inner_radius=inner_radius,
    )


def transience_check(params, delta, radius):
    """Transience criterion for the two-processor relative chain.

    Uses the bounded family f(y) = min(exp(delta*y), 1) with the
    exception set A = {y >= 0}: the chain is transient when the drift
    of f is nonpositive at every y < 0 and some state has f below
    inf_A f.  Verified on y in [-radius, -1].
    """
    if params.n != 2:
        raise AssumptionViolated(
            "the exponential test family is specific to 2 processors")
    delta = float(delta)
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    radius = int(radius)

    def f(y):
        return min(math.exp(delta * y[0]), 1.0)

    worst = -math.inf
    for y in range(-radius, 0):
        tl = relative_transitions(params, (y,))
        fy = f((y,))
        drift = sum(e.prob * (f(e.target) - fy) for e in tl.entries)
        worst = max(worst, drift)
    finite_sup = -math.inf
    for y in range(0, radius + 1):
        tl = relative_transitions(params, (y,))
        finite_sup = max(finite_sup,
                         tl.self_loop * f((y,))
                         + sum(e.prob * f(e.target) for e in tl.entries))
    witness = f((-1,)) < 1.0
    verdict = worst <= 0.0 and witness
    return DriftCheckResult(
        criterion="transience",
        domain_size=radius,
        worst_drift=worst,
        finite_set_size=radius + 1,
        finite_set_sup=finite_sup,
        finite_set_max_f=1.0,
        verdict=verdict,
        radius=float(radius),
        witness=witness,
    )


def find_transient_delta(params, radius, max_halvings=40):
    """First delta in {0.5, 0.25, ...} passing transience_check, or None."""
    delta = 1.0
    for _ in range(max_halvings):
        delta *= 0.5
        result = transience_check(params, delta, radius)
        if result.verdict:
            return delta, result
    return None


# ---------------------------------------------------------------------------
# monotone coupling


@njit
def _coupled_core(lam, bet_lo, bet_hi, z, horizon, state, windows, woff,
                  wlen):
    n = lam.shape[0]
    nb = max(n - 1, 1)
    xa = np.zeros(n, np.int64)  # smaller-rate model: dominates
    xb = np.zeros(n, np.int64)
    bufa = np.empty((nb, 256), np.int64)
    loa = np.zeros(nb, np.int64)
    hia = np.zeros(nb, np.int64)
    bufb = np.empty((nb, 256), np.int64)
    lob = np.zeros(nb, np.int64)
    hib = np.zeros(nb, np.int64)
    ncat = n + n - 1
    cum = np.empty(ncat, np.float64)
    acc = 0.0
    for k in range(n):
        acc += lam[k]
        cum[k] = acc
    for q in range(n - 1):
        acc += bet_hi[q]
        cum[n + q] = acc
    violations = 0
    first_violation = -1.0
    t = 0.0
    events = 0
    while True:
        t += _rng.exponential(state, z)
        if t > horizon:
            break
        r = _rng.uniform(state) * z
        c = 0
        while c < ncat - 1 and r >= cum[c]:
            c += 1
        if c < n:
            xa[c] += 1
            xb[c] += 1
        else:
            q = c - n
            if q > 0:
                bufb = _log_append(bufb, lob, hib, q, xb[q])
            if xb[q + 1] > xb[q]:
                _cascade(xb, bufb, lob, hib, q, xb[q])
            keep = True
            if bet_lo[q] < bet_hi[q]:
                keep = (bet_lo[q] > 0.0
                        and _rng.uniform(state) * bet_hi[q] < bet_lo[q])
            if keep:
                if q > 0:
                    bufa = _log_append(bufa, loa, hia, q, xa[q])
                if xa[q + 1] > xa[q]:
                    _cascade(xa, bufa, loa, hia, q, xa[q])
                if q == 0 and windows.shape[0] > 0:
                    w = int(t)
                    if w < wlen:
                        windows[woff + w] += 1
        for i in range(n):
            if xa[i] < xb[i]:
                violations += 1
                if first_violation < 0.0:
                    first_violation = t
                break
        events += 1
        if events & 8191 == 0:
            _prune_logs(xa, bufa, loa, hia)
            _prune_logs(xb, bufb, lob, hib)
    return violations, first_violation


@dataclass(frozen=True)
class CouplingReport:
    """Pathwise dominance record of coupled runs."""

    runs: int
    dominance_violations: int
    first_violation_time: float  # None when no violation occurred
    horizon: float
    seed: int
    window_counts: tuple = None  # kept 1->2 messages per unit window


def coupled_run(lo, hi, horizon, seed, runs=1, collect_windows=False):
    """Run the thinning coupling of two models on one probability space.

    ``lo`` must have the smaller message rates; it is the
    stochastically larger process and should dominate componentwise at
    every event time.  Ticks are shared, messages fire at the larger
    rates, and each is kept for ``lo`` with probability
    beta_lo/beta_hi.
    """
    if lo.n != hi.n:
        raise ParamMismatch(f"processor counts differ: {lo.n} != {hi.n}")
    if lo.lambdas != hi.lambdas:
        raise ParamMismatch("coupled models must share tick rates")
    for q in range(lo.n - 1):
        if lo.betas[q] > hi.betas[q]:
            raise ParamMismatch(
                f"beta_lo[{q + 1}] = {lo.betas[q]} exceeds "
                f"beta_hi[{q + 1}] = {hi.betas[q]}")
    horizon = float(horizon)
    if horizon <= 0.0:
        raise NonPositiveHorizon(f"horizon must be positive, got {horizon}")
    runs = int(runs)
    lam = np.asarray(hi.lambdas, dtype=np.float64)
    bet_lo = np.asarray(lo.betas, dtype=np.float64)
    bet_hi = np.asarray(hi.betas, dtype=np.float64)
    wlen = int(math.floor(horizon)) if collect_windows else 0
    windows = np.zeros(wlen * runs, dtype=np.int64)
    total_violations = 0
    first_time = None
    for k in range(runs):
        state = _rng.make_state(seed, k)
        violations, tviol = _coupled_core(
            lam, bet_lo, bet_hi, hi.z, horizon, state, windows,
            k * wlen, wlen)
        total_violations += int(violations)
        if violations and first_time is None:
            first_time = float(tviol)
    return CouplingReport(
        runs=runs,
        dominance_violations=total_violations,
        first_violation_time=first_time,
        horizon=horizon,
        seed=int(seed),
        window_counts=tuple(int(c) for c in windows) if collect_windows else None,
    )
