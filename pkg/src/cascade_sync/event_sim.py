"""Continuous-time event simulator with explicit message logs.

This is the ground-truth realization of the cascade dynamics: every
processor ticks on its own Poisson clock, every sender q emits
messages to q+1 on an independent Poisson clock, and a delivered
message carrying payload x_q rolls the receiver back when the receiver
is ahead.  A rollback to value w eliminates from the rolled processor's
log every message with payload >= w (those sends are undone and the
position range is redone from scratch); if any eliminated payload lies
below the next processor's local time, the next processor rolls back
to the minimal such payload, and so on down the chain.

The simulator keeps one log per sender.  Only payload values matter
for the dynamics (multiplicity and send times never influence a
cascade), and surviving payloads stay sorted because an elimination
always cuts a suffix, so the fast core stores sorted unique payloads
per sender in a ring-like buffer.  A payload strictly below every
possible future rollback target of its sender can never be eliminated;
since cascade targets only grow along the chain, min(x_1..x_{q-1}) is
a safe pruning floor for sender q, and processor 1 never rolls back at
all so its sends are not retained.

``apply_message`` is the readable single-event reference used by unit
tests; ``run_event_sim`` drives the compiled core.  The two are checked
against each other step for step.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from ._accel import njit
from .errors import IndexOutOfRange, LengthMismatch, NonPositiveHorizon

# ---------------------------------------------------------------------------
# reference implementation (python objects, full logs)


@dataclass
class SimState:
    """Mutable simulator state: time, local times, per-sender logs.

    ``logs[q]`` (0-based sender q = processor q+1 in 1-based numbering)
    is a list of (send_time, payload) pairs, oldest first.  Confine a
    SimState to one worker; run independent replicas for concurrency.
    """

    t: float
    x: list
    logs: list

    @classmethod
    def initial(cls, n):
        return cls(t=0.0, x=[0] * n, logs=[[] for _ in range(max(n - 1, 1))])


def apply_message(state, j, t):
    """Deliver a j -> j+1 message (1-based sender j) at time t.

    Records the send in j's log.  If the receiver is ahead it rolls
    back to x_j, eliminated log entries cascade down the chain to the
    minimal eliminated payload below each next processor's time.
    Returns the number of processors rolled back (0 for an ineffective
    delivery).
    """
    n = len(state.x)
    if not 1 <= j <= n - 1:
        raise IndexOutOfRange(f"sender {j} outside 1..{n - 1}")
    js = j - 1
    x = state.x
    state.logs[js].append((t, x[js]))
    state.t = t
    if x[js + 1] <= x[js]:
        return 0
    target = x[js]
    m = js + 1
    while True:
        x[m] = target
        if m == n - 1:
            break
        log = state.logs[m]
        eliminated = [p for (_, p) in log if p >= target]
        state.logs[m] = [(s, p) for (s, p) in log if p < target]
        if not eliminated:
            break
        lowest = min(eliminated)
        if lowest >= x[m + 1]:
            break
        target = lowest
        m += 1
    return m - js


# ---------------------------------------------------------------------------
# compiled core: packed sorted-unique payload logs


@njit
def _bisect_left(buf, row, lo_i, hi_i, val):
    a = lo_i
    b = hi_i
    while a < b:
        mid = (a + b) // 2
        if buf[row, mid] < val:
            a = mid + 1
        else:
            b = mid
    return a


@njit
def _log_append(buf, lo, hi, q, payload):
    """Append payload to sender row q; returns buf (maybe reallocated)."""
    if hi[q] > lo[q] and buf[q, hi[q] - 1] == payload:
        return buf
    if hi[q] == buf.shape[1]:
        if lo[q] > 0:
            cnt = hi[q] - lo[q]
            for i in range(cnt):
                buf[q, i] = buf[q, lo[q] + i]
            lo[q] = 0
            hi[q] = cnt
        if hi[q] == buf.shape[1]:
            nbuf = np.empty((buf.shape[0], buf.shape[1] * 2), np.int64)
            for r in range(buf.shape[0]):
                for i in range(lo[r], hi[r]):
                    nbuf[r, i] = buf[r, i]
            buf = nbuf
    buf[q, hi[q]] = payload
    hi[q] += 1
    return buf


@njit
def _cascade(x, buf, lo, hi, q, target):
    """Roll processor q+1 back to target and propagate; returns depth."""
    n = x.shape[0]
    m = q + 1
    while True:
        x[m] = target
        if m == n - 1:
            break
        pos = _bisect_left(buf, m, lo[m], hi[m], target)
        had = pos < hi[m]
        lowest = buf[m, pos] if had else 0
        hi[m] = pos
        if had and lowest < x[m + 1]:
            target = lowest
            m += 1
        else:
            break
    return m - q


@njit
def _prune_logs(x, buf, lo, hi):
    nb = hi.shape[0]
    floor = x[0]
    for q in range(1, nb):
        lo[q] = _bisect_left(buf, q, lo[q], hi[q], floor)
        if x[q] < floor:
            floor = x[q]


@njit
def _event_core(lam, bet, z, horizon, state):
    n = lam.shape[0]
    nb = max(n - 1, 1)
    x = np.zeros(n, np.int64)
    ticks = np.zeros(n, np.int64)
    messages = np.zeros(nb, np.int64)
    depth_hist = np.zeros(n, np.int64)
    buf = np.empty((nb, 256), np.int64)
    lo = np.zeros(nb, np.int64)
    hi = np.zeros(nb, np.int64)
    ncat = n + n - 1
    cum = np.empty(ncat, np.float64)
    acc = 0.0
    for k in range(n):
        acc += lam[k]
        cum[k] = acc
    for q in range(n - 1):
        acc += bet[q]
        cum[n + q] = acc
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
            x[c] += 1
            ticks[c] += 1
        else:
            q = c - n
            messages[q] += 1
            if q > 0:
                # processor 1 never rolls back, so its sends never matter
                buf = _log_append(buf, lo, hi, q, x[q])
            if x[q + 1] > x[q]:
                depth = _cascade(x, buf, lo, hi, q, x[q])
                depth_hist[depth] += 1
            else:
                depth_hist[0] += 1
        events += 1
        if events & 8191 == 0:
            _prune_logs(x, buf, lo, hi)
    return x, ticks, messages, depth_hist, events


@dataclass(frozen=True)
class EventSimReport:
    """Trajectory summary of one event-simulation run."""

    final_x: tuple
    v_hat: tuple
    horizon: float
    seed: int
    events: int
    ticks: tuple
    messages_sent: tuple
    rollback_depths: tuple  # index d: messages rolling back exactly d processors


def run_event_sim(params, horizon, seed):
    """Simulate the continuous-time cascade from x = 0 up to the horizon."""
    horizon = float(horizon)
    if not horizon > 0.0:
        raise NonPositiveHorizon(f"horizon must be positive, got {horizon}")
    lam = np.asarray(params.lambdas, dtype=np.float64)
    bet = np.asarray(params.betas, dtype=np.float64)
    state = _rng.make_state(seed)
    x, ticks, messages, depth_hist, events = _event_core(
        lam, bet, params.z, horizon, state)
    return EventSimReport(
        final_x=tuple(int(v) for v in x),
        v_hat=tuple(float(v) / horizon for v in x),
        horizon=horizon,
        seed=int(seed),
        events=int(events),
        ticks=tuple(int(v) for v in ticks),
        messages_sent=tuple(int(v) for v in messages) if params.n > 1 else (),
        rollback_depths=tuple(int(v) for v in depth_hist),
    )


# ---------------------------------------------------------------------------
# one-step rollback probe


@njit
def _probe_core(lam, bet, z, x0, trials, state, expected):
    """Outcome counts of a forced 1 -> 2 delivery from a prepared state.

    Per trial the sender logs are regenerated by simulating the
    message/tick races position by position: a completed local-time
    position of processor q carries a message iff an Exp(beta_q) arrival
    beats the Exp(lambda_q) tick that closed the position; the current
    position carries one iff an Exp(beta_q) arrival falls inside the
    position's elapsed age, which for a Poisson tick clock inspected at
    an independent arrival epoch is itself Exp(lambda_q) distributed.
    Position values below x_1 are skipped: no cascade target can reach
    below the initiating payload.
    """
    n = x0.shape[0]
    nb = max(n - 1, 1)
    k = expected.shape[0]
    counts = np.zeros(k + 1, np.int64)
    span = 0
    for q in range(1, n - 1):
        span = max(span, x0[q] - x0[0] + 1)
    buf = np.empty((nb, max(span, 1)), np.int64)
    lo = np.zeros(nb, np.int64)
    hi = np.zeros(nb, np.int64)
    x = np.empty(n, np.int64)
    for _ in range(trials):
        for i in range(n):
            x[i] = x0[i]
        for q in range(1, n - 1):
            lo[q] = 0
            hi[q] = 0
            if bet[q] <= 0.0:
                continue
            v = x0[0]
            while v <= x0[q]:
                # completed positions race a full Exp(lambda) tick window;
                # the current position's elapsed age has the same law
                window = _rng.exponential(state, lam[q])
                first_msg = _rng.exponential(state, bet[q])
                if first_msg < window:
                    buf[q, hi[q]] = v
                    hi[q] += 1
                v += 1
        if x[1] > x[0]:
            _cascade(x, buf, lo, hi, 0, x[0])
        hit = k
        for row in range(k):
            same = True
            for i in range(n):
                if expected[row, i] != x[i]:
                    same = False
                    break
            if same:
                hit = row
                break
        counts[hit] += 1
    return counts


def rollback_probe(params, x, trials, seed):
    """Empirical one-step law of a forced 1 -> 2 message from state x.

    Returns (outcomes, counts, other) where outcomes are the exact
    kernel targets of rollback_outcomes(params, x, 1), counts their
    empirical trial counts, and other the trials landing elsewhere.
    """
    from .kernel import rollback_outcomes

    x = tuple(int(v) for v in x)
    if len(x) != params.n:
        raise LengthMismatch(f"state length {len(x)} != n = {params.n}")
    exact = rollback_outcomes(params, x, 1)
    targets = [e.target for e in exact.entries]
    expected = np.asarray(targets, dtype=np.int64).reshape(len(targets), params.n)
    lam = np.asarray(params.lambdas, dtype=np.float64)
    bet = np.asarray(params.betas, dtype=np.float64)
    state = _rng.make_state(seed)
    counts = _probe_core(lam, bet, params.z, np.asarray(x, dtype=np.int64),
                         int(trials), state, expected)
    return targets, tuple(int(c) for c in counts[:-1]), int(counts[-1])
