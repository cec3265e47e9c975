"""Exact one-step transition law of the embedded chain.

Observing the continuous-time cascade at event epochs gives a discrete
chain on Z^N.  Each step is one of:

* a tick of processor j (probability lambda_j / z), incrementing x_j;
* a message j -> j+1 (probability beta_{j,j+1} / z).  If the receiver
  is not ahead (x_{j+1} <= x_j) nothing changes (self-loop mass).
  Otherwise the receiver rolls back to x_j and the rollback may cascade
  rightward: when processor q is rolled back to w_q, each local-time
  position v >= w_q of q independently carries at least one earlier
  q -> q+1 message with probability 1 - b_q, and the lowest such
  position below both x_q and x_{q+1} (if any) becomes the rollback
  target w_{q+1} of processor q+1.

The resulting outcome probability for a stop at processor l is the
product over intermediate processors q of

    (1 - b_q) * b_q ** (w_{q+1} - w_q)

times the all-positions-empty factor b_l ** (min(x_l, x_{l+1}-1) - w_l + 1),
clamped to exponent zero when the scan range is empty (then the cascade
stops with certainty; this covers receivers at or behind the target).
The factors telescope, so the total rollback mass is exactly
beta_{j,j+1} / z.

Relative coordinates y_j = x_j - x_1 (j = 2..N) remove the free drift
of the first processor; the relative kernel is the projection of the
absolute one, with the tick of processor 1 becoming a step by -(1,..,1).
"""

from dataclasses import dataclass
from typing import NamedTuple

from . import rng as _rng
from .errors import (
    EmptyRollback,
    IndexOutOfRange,
    LengthMismatch,
    ProbabilityUnderflow,
)

FREE = "free"
ROLLBACK = "rollback"

_UNDERFLOW = 1e-300


class Transition(NamedTuple):
    target: tuple
    prob: float
    kind: str


@dataclass(frozen=True)
class TransitionList:
    """Finite list of (target, probability, kind) plus self-loop mass.

    Full kernels (enumerate_transitions, relative_transitions) sum to 1
    including the self-loop; partial lists returned by
    rollback_outcomes and split_transitions carry only their stated
    mass and have self_loop 0.  A target appears at most once per kind;
    the same target may carry both a free and a rollback component.
    """

    entries: tuple
    self_loop: float

    def total_mass(self):
        return self.self_loop + sum(e.prob for e in self.entries)

    def probability_of(self, target):
        target = tuple(target)
        return sum(e.prob for e in self.entries if e.target == target)


def _check_state(params, x):
    x = tuple(int(v) for v in x)
    if len(x) != params.n:
        raise LengthMismatch(f"state length {len(x)} != n = {params.n}")
    return x


def _rollback_entries(params, x, js):
    """Rollback outcomes for 0-based sender js; requires x[js+1] > x[js]."""
    n = params.n
    b = params.b
    base = params.betas[js] / params.z
    if base <= 0.0:
        return []
    out = []
    newx = list(x)

    def descend(q, w, factor):
        old_q = newx[q]
        newx[q] = w
        if q == n - 1:
            out.append((tuple(newx), factor))
        else:
            top = min(old_q, x[q + 1] - 1)
            bq = b[q]
            if top < w:
                out.append((tuple(newx), factor))
            else:
                stop = factor * bq ** (top - w + 1)
                if stop < _UNDERFLOW:
                    raise ProbabilityUnderflow(
                        f"stop factor underflow at processor {q + 1}, "
                        f"range {top - w + 1}")
                out.append((tuple(newx), stop))
                if bq < 1.0:
                    p = factor * (1.0 - bq)
                    for v in range(w, top + 1):
                        if p < _UNDERFLOW:
                            raise ProbabilityUnderflow(
                                f"continuation factor underflow at "
                                f"processor {q + 1}, offset {v - w}")
                        descend(q + 1, v, p)
                        p *= bq
        newx[q] = old_q

    descend(js + 1, x[js], base)
    return out


def rollback_outcomes(params, x, j):
    """All post-rollback states of a j -> j+1 message, 1-based sender j.

    Requires x_{j+1} > x_j (EmptyRollback otherwise).  Total mass is
    exactly beta_{j,j+1} / z.
    """
    x = _check_state(params, x)
    if not 1 <= j <= params.n - 1:
        raise IndexOutOfRange(f"sender {j} outside 1..{params.n - 1}")
    js = j - 1
    if x[js + 1] <= x[js]:
        raise EmptyRollback(
            f"x_{j + 1} = {x[js + 1]} <= x_{j} = {x[js]}: message has no effect")
    merged = {}
    for target, p in _rollback_entries(params, x, js):
        merged[target] = merged.get(target, 0.0) + p
    entries = tuple(Transition(t, p, ROLLBACK) for t, p in merged.items())
    return TransitionList(entries=entries, self_loop=0.0)


def enumerate_transitions(params, x):
    """Full one-step law from state x: free ticks, rollbacks, self-loop."""
    x = _check_state(params, x)
    z = params.z
    entries = []
    for j in range(params.n):
        target = x[:j] + (x[j] + 1,) + x[j + 1:]
        entries.append(Transition(target, params.lambdas[j] / z, FREE))
    self_loop = 0.0
    for js in range(params.n - 1):
        mass = params.betas[js] / z
        if mass == 0.0:
            continue
        if x[js + 1] > x[js]:
            merged = {}
            for target, p in _rollback_entries(params, x, js):
                merged[target] = merged.get(target, 0.0) + p
            entries.extend(Transition(t, p, ROLLBACK) for t, p in merged.items())
        else:
            self_loop += mass
    return TransitionList(entries=tuple(entries), self_loop=self_loop)


def relative_transitions(params, y):
    """One-step law of the relative chain y_j = x_j - x_1, j = 2..N."""
    if params.n < 2:
        raise LengthMismatch("relative coordinates need at least 2 processors")
    y = tuple(int(v) for v in y)
    if len(y) != params.n - 1:
        raise LengthMismatch(f"relative state length {len(y)} != {params.n - 1}")
    absolute = enumerate_transitions(params, (0,) + y)
    entries = tuple(
        Transition(tuple(t - e.target[0] for t in e.target[1:]), e.prob, e.kind)
        for e in absolute.entries
    )
    return TransitionList(entries=entries, self_loop=absolute.self_loop)


def split_transitions(tl):
    """Split a TransitionList into its free and rollback parts.

    The parts carry entries only (self_loop 0); their masses sum to
    1 - tl.self_loop when tl is a full kernel.
    """
    free = tuple(e for e in tl.entries if e.kind == FREE)
    rb = tuple(e for e in tl.entries if e.kind == ROLLBACK)
    return (TransitionList(entries=free, self_loop=0.0),
            TransitionList(entries=rb, self_loop=0.0))


def sample_step(params, x, state):
    """Draw one embedded-chain step; mutates the rng state in place."""
    tl = enumerate_transitions(params, x)
    u = _rng.uniform(state)
    acc = 0.0
    for e in tl.entries:
        acc += e.prob
        if u < acc:
            return e.target
    return tuple(int(v) for v in x)


def table_relative_transitions(params, y):
    """Relative N=3 kernel from the closed-form case table.

    Written directly from the case analysis of the three-processor
    relative chain (pure 1->2 hit, 2->3 hit, and the two 1->2->3
    cascade cases split by whether processor 3 trails processor 2),
    independently of the general enumerator; used to cross-validate it.
    """
    if params.n != 3:
        raise LengthMismatch("case table is specific to 3 processors")
    y2, y3 = (int(v) for v in y)
    z = params.z
    l1, l2, l3 = params.lambdas
    b12, b23 = params.betas
    # probability processor 2 sends at least one message while sitting
    # at one local-time value, before ticking
    o2 = b23 / (l2 + b23)
    entries = [
        Transition((y2 + 1, y3), l2 / z, FREE),
        Transition((y2, y3 + 1), l3 / z, FREE),
        Transition((y2 - 1, y3 - 1), l1 / z, FREE),
    ]
    self_loop = 0.0
    m12 = b12 / z
    m23 = b23 / z
    if m12 > 0.0:
        if y2 <= 0:
            self_loop += m12
        elif y3 <= 0:
            # 1->2 only: eliminated payloads all >= x_1 >= x_3
            entries.append(Transition((0, y3), m12, ROLLBACK))
        elif y3 <= y2:
            # 1->2->3 with processor 3 not ahead of 2: z3 in [0, y3)
            if o2 > 0.0:
                for z3 in range(y3):
                    entries.append(Transition(
                        (0, z3), m12 * o2 * (1.0 - o2) ** z3, ROLLBACK))
            entries.append(Transition((0, y3), m12 * (1.0 - o2) ** y3, ROLLBACK))
        else:
            # 1->2->3 with processor 3 ahead of 2: z3 in [0, y2]
            if o2 > 0.0:
                for z3 in range(y2 + 1):
                    entries.append(Transition(
                        (0, z3), m12 * o2 * (1.0 - o2) ** z3, ROLLBACK))
            entries.append(Transition(
                (0, y3), m12 * (1.0 - o2) ** (y2 + 1), ROLLBACK))
    if m23 > 0.0:
        if y3 > y2:
            entries.append(Transition((y2, y2), m23, ROLLBACK))
        else:
            self_loop += m23
    entries = [e for e in entries if e.prob > 0.0]
    return TransitionList(entries=tuple(entries), self_loop=self_loop)
