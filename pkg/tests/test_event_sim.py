import numpy as np
import pytest

from cascade_sync import (
    SimState,
    apply_message,
    rollback_outcomes,
    run_event_sim,
    validate_params,
)
from cascade_sync import rng
from cascade_sync.errors import IndexOutOfRange, NonPositiveHorizon
from cascade_sync.event_sim import rollback_probe


def test_apply_message_simple_rollback():
    state = SimState(t=0.0, x=[0, 3], logs=[[]])
    depth = apply_message(state, 1, 0.5)
    assert state.x == [0, 0]
    assert depth == 1
    assert state.logs[0] == [(0.5, 0)]


def test_apply_message_cascades_through_logged_payload():
    # processor 2 once sent payload 1; rolling 2 back to 0 eliminates it
    # and drags processor 3 down to 1
    state = SimState(t=0.0, x=[0, 2, 4], logs=[[], [(0.1, 1)]])
    depth = apply_message(state, 1, 0.2)
    assert state.x == [0, 0, 1]
    assert depth == 2
    assert state.logs[1] == []


def test_apply_message_without_eliminations_stops():
    state = SimState(t=0.0, x=[0, 2, 4], logs=[[], []])
    depth = apply_message(state, 1, 0.2)
    assert state.x == [0, 0, 4]
    assert depth == 1


def test_apply_message_ineffective_delivery_logs_send():
    state = SimState(t=0.0, x=[2, 1], logs=[[]])
    depth = apply_message(state, 1, 0.3)
    assert depth == 0
    assert state.x == [2, 1]
    assert state.logs[0] == [(0.3, 2)]


def test_apply_message_eliminates_only_at_or_above_target():
    # surviving payloads stay; equal-to-target payload is eliminated
    state = SimState(t=0.0, x=[1, 5, 3], logs=[[], [(0.1, 0), (0.2, 1), (0.3, 4)]])
    apply_message(state, 1, 0.4)
    assert state.x == [1, 1, 3]  # eliminated payloads 1, 4; lowest is 1 >= x3? no: 1 < 3
    # payload 1 (== target) eliminated, payload 4 eliminated, 0 survives
    assert state.logs[1] == [(0.1, 0)]


def test_apply_message_cascade_target_is_minimal_eliminated():
    state = SimState(t=0.0, x=[0, 6, 9, 9], logs=[[], [(0.1, 2), (0.2, 4)], []])
    apply_message(state, 1, 0.5)
    # both payloads eliminated; 3 rolls to min(2, 4) = 2, then 4 has no log
    assert state.x == [0, 0, 2, 2]


def test_apply_message_bad_sender():
    state = SimState.initial(3)
    with pytest.raises(IndexOutOfRange):
        apply_message(state, 3, 0.1)


def test_rollback_never_lifts_any_coordinate():
    u = rng.make_state(900)
    for _ in range(200):
        n = 2 + int(rng.uniform(u) * 4)
        x = [int(rng.uniform(u) * 21) - 10 for _ in range(n)]
        logs = []
        for q in range(n - 1):
            entries = sorted(int(rng.uniform(u) * 21) - 10
                             for _ in range(int(rng.uniform(u) * 4)))
            logs.append([(0.0, p) for p in entries if p <= x[q]])
        state = SimState(t=0.0, x=list(x), logs=logs)
        j = 1 + int(rng.uniform(u) * (n - 1))
        apply_message(state, j, 1.0)
        assert all(a <= b for a, b in zip(state.x, x))
        assert state.x[j] <= state.x[j - 1]


def test_run_event_sim_single_processor_lln():
    p = validate_params(1, (3.0,), ())
    report = run_event_sim(p, 10 ** 5, seed=17)
    assert report.v_hat[0] == pytest.approx(3.0, abs=0.05)


def test_run_event_sim_two_processor_synchronization():
    p = validate_params(2, (1, 2), (1,))
    report = run_event_sim(p, 10 ** 6, seed=21)
    assert report.v_hat[0] == pytest.approx(1.0, abs=0.02)
    assert report.v_hat[1] == pytest.approx(1.0, abs=0.02)


def test_run_event_sim_deterministic():
    p = validate_params(3, (1, 2, 3), (1, 1))
    a = run_event_sim(p, 500.0, seed=9)
    b = run_event_sim(p, 500.0, seed=9)
    assert a == b


def test_run_event_sim_rejects_bad_horizon():
    p = validate_params(2, (1, 2), (1,))
    with pytest.raises(NonPositiveHorizon):
        run_event_sim(p, 0.0, seed=1)


def test_event_counts_are_consistent():
    p = validate_params(3, (1, 2, 3), (1, 1))
    report = run_event_sim(p, 2000.0, seed=4)
    assert report.events == sum(report.ticks) + sum(report.messages_sent)
    assert sum(report.rollback_depths) == sum(report.messages_sent)
    # ticks are Poisson(lambda * horizon)
    for j, lam in enumerate(p.lambdas):
        mean = lam * report.horizon
        assert abs(report.ticks[j] - mean) < 6 * mean ** 0.5


def test_probe_matches_kernel_at_unit_rates():
    p = validate_params(3, (1, 1, 1), (1, 1))
    targets, counts, other = rollback_probe(p, (0, 2, 4), 200_000, seed=11)
    assert other == 0
    exact = rollback_outcomes(p, (0, 2, 4), 1)
    scale = p.z / p.betas[0]
    total = sum(counts)
    tv = 0.5 * sum(
        abs(c / total - exact.probability_of(t) * scale)
        for t, c in zip(targets, counts))
    assert tv < 0.01


def test_probe_matches_kernel_at_asymmetric_rates():
    # distinguishes the tick-first probability from its complement: the
    # cascade continuation must use beta/(lambda+beta) per position
    p = validate_params(3, (1.0, 3.0, 2.0), (2.0, 1.0))
    targets, counts, other = rollback_probe(p, (0, 2, 4), 200_000, seed=13)
    assert other == 0
    exact = rollback_outcomes(p, (0, 2, 4), 1)
    scale = p.z / p.betas[0]
    total = sum(counts)
    for t, c in zip(targets, counts):
        assert c / total == pytest.approx(
            exact.probability_of(t) * scale, abs=0.01)


def test_probe_depth_two_state():
    # x3 between x1 and x2: cascade can stop at 2 or drag 3 down
    p = validate_params(3, (1.0, 1.5, 0.5), (0.7, 1.3))
    targets, counts, other = rollback_probe(p, (-1, 4, 2), 200_000, seed=29)
    assert other == 0
    exact = rollback_outcomes(p, (-1, 4, 2), 1)
    scale = p.z / p.betas[0]
    total = sum(counts)
    tv = 0.5 * sum(
        abs(c / total - exact.probability_of(t) * scale)
        for t, c in zip(targets, counts))
    assert tv < 0.01


def _python_reference_run(params, horizon, seed):
    """Drive apply_message with the same stream as the compiled core."""
    import math

    state = rng.make_state(seed)
    n = params.n
    sim = SimState.initial(n)
    ticks = [0] * n
    cum = []
    acc = 0.0
    for lam in params.lambdas:
        acc += lam
        cum.append(acc)
    for bet in params.betas:
        acc += bet
        cum.append(acc)
    t = 0.0
    while True:
        t += rng.exponential(state, params.z)
        if t > horizon:
            break
        r = rng.uniform(state) * params.z
        c = 0
        while c < len(cum) - 1 and r >= cum[c]:
            c += 1
        if c < n:
            sim.x[c] += 1
            ticks[c] += 1
        else:
            apply_message(sim, c - n + 1, t)
    return sim.x, ticks


@pytest.mark.parametrize("lambdas,betas", [
    ((1, 2), (1,)),
    ((1, 2, 3), (1, 1)),
    ((2.0, 0.5, 1.5, 0.7), (1.0, 0.0, 2.0)),
])
def test_core_matches_python_reference(lambdas, betas):
    p = validate_params(len(lambdas), lambdas, betas)
    horizon = 300.0
    for seed in (1, 2, 3):
        ref_x, ref_ticks = _python_reference_run(p, horizon, seed)
        report = run_event_sim(p, horizon, seed)
        assert tuple(ref_x) == report.final_x
        assert tuple(ref_ticks) == report.ticks
