"""Kernel tests, anchored by a brute-force enumeration oracle.

The oracle enumerates every admissible rollback sequence directly from
the multi-rollback product formula (stop level by stop level, ranges
materialized with itertools-style recursion) and is kept independent of
the package's recursive enumerator.
"""

import math

import numpy as np
import pytest

from cascade_sync import (
    enumerate_transitions,
    relative_transitions,
    rollback_outcomes,
    sample_step,
    split_transitions,
    table_relative_transitions,
    validate_params,
)
from cascade_sync import rng
from cascade_sync.checks import (
    max_difference,
    normalization_sweep,
    project_onto_prefix,
    random_params,
    random_state_vec,
    transition_dict,
)
from cascade_sync.errors import EmptyRollback, IndexOutOfRange, LengthMismatch
from cascade_sync.kernel import FREE, ROLLBACK


def brute_rollback(params, x, j):
    """Literal sum over admissible rollback sequences, 1-based sender j."""
    n = params.n
    x = tuple(x)
    js = j - 1

    def occupancy(q):
        lam, bet = params.lambdas[q], params.betas[q]
        return bet / (lam + bet)

    out = {}
    for l0 in range(js + 1, n):  # 0-based stop processor

        def sequences(q, prefix):
            if q == l0:
                yield tuple(prefix)
                return
            hi = min(x[q], x[q + 1] - 1)
            for v in range(prefix[-1], hi + 1):
                yield from sequences(q + 1, prefix + [v])

        for w in sequences(js + 1, [x[js]]):
            p = params.betas[js] / params.z
            for i, q in enumerate(range(js + 1, l0)):
                o = occupancy(q)
                p *= o * (1.0 - o) ** (w[i + 1] - w[i])
            if l0 < n - 1:
                o = occupancy(l0)
                expo = min(x[l0], x[l0 + 1] - 1) - w[-1] + 1
                p *= (1.0 - o) ** max(expo, 0)
            if p == 0.0:
                continue
            target = list(x)
            for i, q in enumerate(range(js + 1, l0 + 1)):
                target[q] = w[i]
            key = tuple(target)
            out[key] = out.get(key, 0.0) + p
    return out


# ---------------------------------------------------------------------------
# rollback_outcomes


def test_rollback_example_masses():
    # oracle-derived masses for x=(0,2,4) at unit rates: the stop-at-2
    # branch keeps processor 3, the three cascade branches hit it
    p = validate_params(3, (1, 1, 1), (1, 1))
    tl = rollback_outcomes(p, (0, 2, 4), 1)
    got = {e.target: e.prob for e in tl.entries}
    expected = {(0, 0, 4): 1 / 40, (0, 0, 0): 1 / 10,
                (0, 0, 1): 1 / 20, (0, 0, 2): 1 / 40}
    assert set(got) == set(expected)
    for t, v in expected.items():
        assert got[t] == pytest.approx(v, abs=1e-15)
    assert tl.total_mass() == pytest.approx(p.betas[0] / p.z, abs=1e-12)
    brute = brute_rollback(p, (0, 2, 4), 1)
    assert set(brute) == set(expected)
    for t in brute:
        assert got[t] == pytest.approx(brute[t], abs=1e-15)


def test_rollback_two_processors_single_outcome():
    p = validate_params(2, (1.7, 0.4), (0.9,))
    for x2 in (1, 3, 17):
        tl = rollback_outcomes(p, (0, x2), 1)
        assert len(tl.entries) == 1
        assert tl.entries[0].target == (0, 0)
        assert tl.entries[0].prob == pytest.approx(p.betas[0] / p.z)


def test_rollback_clamped_exponent_case():
    # receiver of the cascade tail is at or behind the target: the scan
    # range is empty and the cascade stops with certainty
    p = validate_params(3, (1, 1, 1), (1, 1))
    tl = rollback_outcomes(p, (0, 2, 0), 1)
    assert [(e.target, e.prob) for e in tl.entries] == [((0, 0, 0), 0.2)]


def test_rollback_requires_effective_message():
    p = validate_params(2, (1, 2), (1,))
    with pytest.raises(EmptyRollback):
        rollback_outcomes(p, (2, 1), 1)
    with pytest.raises(IndexOutOfRange):
        rollback_outcomes(p, (0, 1), 2)


def test_rollback_matches_brute_force_on_random_states():
    state = rng.make_state(2024)
    for _ in range(150):
        p = random_params(state, n_min=2, n_max=5)
        x = random_state_vec(state, p.n, span=6)
        for j in range(1, p.n):
            if x[j] > x[j - 1] and p.betas[j - 1] > 0:
                got = {e.target: e.prob
                       for e in rollback_outcomes(p, x, j).entries}
                brute = brute_rollback(p, x, j)
                assert set(got) == set(brute)
                for t in brute:
                    assert got[t] == pytest.approx(brute[t], rel=1e-12)


def test_rollback_mass_telescopes_exactly():
    state = rng.make_state(77)
    for _ in range(300):
        p = random_params(state, n_min=2, n_max=6)
        x = random_state_vec(state, p.n, span=20)
        for j in range(1, p.n):
            if x[j] > x[j - 1] and p.betas[j - 1] > 0:
                mass = rollback_outcomes(p, x, j).total_mass()
                assert abs(mass - p.betas[j - 1] / p.z) < 1e-12


# ---------------------------------------------------------------------------
# enumerate_transitions


def test_enumerate_example_with_effective_message():
    p = validate_params(2, (1, 2), (1,))
    tl = enumerate_transitions(p, (0, 3))
    got = {(e.target, e.kind): e.prob for e in tl.entries}
    assert got == {
        ((1, 3), FREE): 0.25,
        ((0, 4), FREE): 0.5,
        ((0, 0), ROLLBACK): 0.25,
    }
    assert tl.self_loop == 0.0


def test_enumerate_example_with_ineffective_message():
    p = validate_params(2, (1, 2), (1,))
    tl = enumerate_transitions(p, (2, 1))
    got = {(e.target, e.kind): e.prob for e in tl.entries}
    assert got == {((3, 1), FREE): 0.25, ((2, 2), FREE): 0.5}
    assert tl.self_loop == 0.25


def test_enumerate_rejects_wrong_length():
    p = validate_params(2, (1, 2), (1,))
    with pytest.raises(LengthMismatch):
        enumerate_transitions(p, (0, 1, 2))


def test_normalization_on_random_states():
    report = normalization_sweep(500, seed=42)
    assert report["max_normalization_residual"] < 1e-12
    assert report["max_telescoping_residual"] < 1e-12


def test_translation_invariance():
    state = rng.make_state(5150)
    for _ in range(50):
        p = random_params(state, n_min=2, n_max=5)
        x = random_state_vec(state, p.n, span=10)
        c = int(rng.uniform(state) * 21) - 10
        base = transition_dict(enumerate_transitions(p, x))
        shifted = transition_dict(
            enumerate_transitions(p, tuple(v + c for v in x)))
        assert set(shifted) == {
            (tuple(t + c for t in tgt), kind) for tgt, kind in base}
        for (tgt, kind), prob in base.items():
            key = (tuple(t + c for t in tgt), kind)
            assert shifted[key] == pytest.approx(prob, rel=1e-15)


def test_truncated_marginal_property():
    state = rng.make_state(99)
    for _ in range(100):
        p = random_params(state, n_min=3, n_max=6)
        n1 = 2
        prefix = validate_params(n1, p.lambdas[:n1], p.betas[:n1 - 1])
        x = random_state_vec(state, p.n, span=15)
        projected = project_onto_prefix(
            enumerate_transitions(p, x), x, n1, p.z, prefix.z)
        direct = transition_dict(enumerate_transitions(prefix, x[:n1]))
        for key in set(projected) | set(direct):
            assert projected.get(key, 0.0) == pytest.approx(
                direct.get(key, 0.0), abs=1e-12)


# ---------------------------------------------------------------------------
# relative_transitions


def test_relative_free_rows_two_processors():
    p = validate_params(2, (1, 2), (1,))
    for k in (-3, 0, 2):
        tl = relative_transitions(p, (k,))
        got = {(e.target, e.kind): e.prob for e in tl.entries}
        assert got[((k + 1,), FREE)] == pytest.approx(2 / 4)
        assert got[((k - 1,), FREE)] == pytest.approx(1 / 4)
        if k > 0:
            assert got[((0,), ROLLBACK)] == pytest.approx(1 / 4)
            assert tl.self_loop == 0.0
        else:
            assert tl.self_loop == pytest.approx(1 / 4)


def test_relative_three_processor_examples():
    p = validate_params(3, (1, 1, 1), (1, 1))
    tl = relative_transitions(p, (2, 4))
    got = {(e.target, e.kind): e.prob for e in tl.entries}
    assert got[((2, 2), ROLLBACK)] == pytest.approx(1 / 5)
    assert got[((0, 4), ROLLBACK)] == pytest.approx((1 / 5) * 0.5 ** 3)


def test_relative_rejects_single_processor():
    p = validate_params(1, (1,), ())
    with pytest.raises(LengthMismatch):
        relative_transitions(p, ())


def test_relative_matches_table_on_box():
    state = rng.make_state(31337)
    params_list = [validate_params(3, (1, 1, 1), (1, 1))]
    for _ in range(2):
        params_list.append(random_params(state, n_min=3, n_max=3))
    for p in params_list:
        for y2 in range(-12, 13):
            for y3 in range(-12, 13):
                general = relative_transitions(p, (y2, y3))
                table = table_relative_transitions(p, (y2, y3))
                assert max_difference(general, table) < 1e-12


def test_same_relative_target_can_carry_free_and_rollback_mass():
    # from y=1 both the tick of processor 1 and the message hit 0
    p = validate_params(2, (1, 2), (1,))
    tl = relative_transitions(p, (1,))
    kinds = {e.kind for e in tl.entries if e.target == (0,)}
    assert kinds == {FREE, ROLLBACK}


# ---------------------------------------------------------------------------
# split_transitions


def test_split_by_provenance():
    p = validate_params(2, (1, 2), (1,))
    tl = enumerate_transitions(p, (0, 3))
    free, rb = split_transitions(tl)
    assert {e.target for e in free.entries} == {(1, 3), (0, 4)}
    assert {e.target for e in rb.entries} == {(0, 0)}


def test_split_rollback_empty_without_effective_messages():
    p = validate_params(2, (1, 2), (1,))
    _, rb = split_transitions(enumerate_transitions(p, (2, 1)))
    assert rb.entries == ()


def test_split_masses_conserved():
    state = rng.make_state(8)
    for _ in range(50):
        p = random_params(state, n_min=2, n_max=5)
        x = random_state_vec(state, p.n, span=8)
        tl = enumerate_transitions(p, x)
        free, rb = split_transitions(tl)
        assert free.total_mass() + rb.total_mass() == pytest.approx(
            1.0 - tl.self_loop, abs=1e-12)


# ---------------------------------------------------------------------------
# sample_step


def test_sample_step_deterministic():
    p = validate_params(3, (1, 2, 3), (1, 1))
    a = sample_step(p, (0, 2, 4), rng.make_state(123))
    b = sample_step(p, (0, 2, 4), rng.make_state(123))
    assert a == b


def test_sample_step_degenerate_single_outcome():
    # only-free single category: one processor
    p = validate_params(1, (2.0,), ())
    state = rng.make_state(5)
    for _ in range(10):
        assert sample_step(p, (7,), state) == (8,)


def test_sample_step_frequency_matches_kernel():
    p = validate_params(2, (1, 2), (1,))
    state = rng.make_state(271828)
    hits = 0
    n = 10 ** 6
    for _ in range(n):
        if sample_step(p, (0, 3), state) == (0, 0):
            hits += 1
    assert abs(hits / n - 0.25) < 0.002
