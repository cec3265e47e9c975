"""Randomized self-checks of the exact kernel.

Three sweeps, all driven by the package RNG so results are reproducible
bit for bit:

* normalization, plus the telescoping identity that each effective
  sender's rollback outcomes carry exactly beta/z total mass;
* equivalence of the general enumerator with the closed-form
  three-processor case table on a centered box of relative states;
* the truncated-marginal property: projecting the N-processor kernel
  onto a prefix and rescaling non-loop mass by z_N / z_prefix must
  reproduce the prefix model's kernel exactly.
"""

from . import rng as _rng
from .kernel import (
    FREE,
    ROLLBACK,
    enumerate_transitions,
    relative_transitions,
    rollback_outcomes,
    table_relative_transitions,
)
from .model import validate_params


def random_params(state, n_min=2, n_max=6, zero_beta_chance=0.1):
    n = n_min + int(_rng.uniform(state) * (n_max - n_min + 1))
    n = min(n, n_max)
    lambdas = [0.2 + 2.8 * _rng.uniform(state) for _ in range(n)]
    betas = []
    for _ in range(n - 1):
        if _rng.uniform(state) < zero_beta_chance:
            betas.append(0.0)
        else:
            betas.append(0.1 + 2.1 * _rng.uniform(state))
    return validate_params(n, lambdas, betas)


def random_state_vec(state, n, span=20):
    return tuple(int(_rng.uniform(state) * (2 * span + 1)) - span
                 for _ in range(n))


def transition_dict(tl):
    out = {}
    for e in tl.entries:
        key = (e.target, e.kind)
        out[key] = out.get(key, 0.0) + e.prob
    return out


def max_difference(tl_a, tl_b):
    """Largest probability discrepancy between two transition lists."""
    da = transition_dict(tl_a)
    db = transition_dict(tl_b)
    worst = abs(tl_a.self_loop - tl_b.self_loop)
    for key in set(da) | set(db):
        worst = max(worst, abs(da.get(key, 0.0) - db.get(key, 0.0)))
    return worst


def normalization_sweep(states, seed, n_max=6, span=20):
    """Max |total mass - 1| and rollback-mass residual over random states."""
    state = _rng.make_state(seed, 101)
    worst_norm = 0.0
    worst_telescope = 0.0
    for _ in range(states):
        params = random_params(state, n_max=n_max)
        x = random_state_vec(state, params.n, span)
        tl = enumerate_transitions(params, x)
        worst_norm = max(worst_norm, abs(tl.total_mass() - 1.0))
        for j in range(1, params.n):
            if x[j] > x[j - 1] and params.betas[j - 1] > 0.0:
                mass = rollback_outcomes(params, x, j).total_mass()
                worst_telescope = max(
                    worst_telescope,
                    abs(mass - params.betas[j - 1] / params.z))
    return {"states": states, "max_normalization_residual": worst_norm,
            "max_telescoping_residual": worst_telescope}


def table_sweep(box, seed, param_sets=3):
    """Max discrepancy between the general and case-table N=3 kernels."""
    state = _rng.make_state(seed, 202)
    worst = 0.0
    for _ in range(param_sets):
        params = random_params(state, n_min=3, n_max=3)
        for y2 in range(-box, box + 1):
            for y3 in range(-box, box + 1):
                general = relative_transitions(params, (y2, y3))
                table = table_relative_transitions(params, (y2, y3))
                worst = max(worst, max_difference(general, table))
    return {"box": box, "param_sets": param_sets, "max_residual": worst}


def project_onto_prefix(tl, x, n1, z_full, z_prefix):
    """Project a full kernel onto the first n1 coordinates and rescale."""
    prefix = tuple(x[:n1])
    entries = {}
    self_loop = tl.self_loop
    scale = z_full / z_prefix
    for e in tl.entries:
        head = e.target[:n1]
        if head == prefix:
            self_loop += e.prob
        else:
            key = (head, e.kind)
            entries[key] = entries.get(key, 0.0) + e.prob * scale
    return entries


def marginal_sweep(states, seed, n_max=6, span=20):
    """Max discrepancy of the projected kernel from the prefix model's."""
    state = _rng.make_state(seed, 303)
    worst = 0.0
    for _ in range(states):
        params = random_params(state, n_min=3, n_max=n_max)
        n1 = 2 + int(_rng.uniform(state) * (params.n - 2))
        n1 = min(n1, params.n - 1)
        prefix_params = validate_params(
            n1, params.lambdas[:n1], params.betas[:n1 - 1])
        x = random_state_vec(state, params.n, span)
        projected = project_onto_prefix(
            enumerate_transitions(params, x), x, n1, params.z, prefix_params.z)
        direct_tl = enumerate_transitions(prefix_params, x[:n1])
        direct = transition_dict(direct_tl)
        for key in set(projected) | set(direct):
            worst = max(worst,
                        abs(projected.get(key, 0.0) - direct.get(key, 0.0)))
        worst = max(worst, abs((1.0 - sum(projected.values()))
                               - direct_tl.self_loop))
    return {"states": states, "max_residual": worst}
