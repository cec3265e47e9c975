"""Batch experiment runner with reproducible JSON configs and reports.

Every run is fully determined by (config, seed): randomness comes from
the package generator, floats are serialized as exact shortest
round-trip literals, and dict keys are emitted sorted, so identical
configs yield byte-identical reports.  Exit codes: 0 success/pass,
1 verification failure (or a model-level refusal, reported as a
diagnostic), 2 usage or config error.
"""

import argparse
import json
import math
import sys
from dataclasses import asdict

from . import checks
from .chain_sim import estimate_speeds
from .errors import CascadeSyncError, ConfigError
from .event_sim import run_event_sim
from .lyapunov import auto_tune_delta, build_contour, drift_report, phi
from .model import decompose_groups, validate_params
from .stability import coupled_run, find_transient_delta, foster_check, \
    transience_check

COMMANDS = ("speeds", "simulate", "groups", "drift", "couple",
            "kernel-check", "check")


# ---------------------------------------------------------------------------
# deterministic serialization


def dumps_report(obj):
    """Deterministic JSON: sorted keys, exact float literals."""
    pieces = []

    def emit(o):
        if o is None:
            pieces.append("null")
        elif isinstance(o, bool):
            pieces.append("true" if o else "false")
        elif isinstance(o, int):
            pieces.append(str(o))
        elif isinstance(o, float):
            if math.isnan(o):
                pieces.append('"nan"')
            elif math.isinf(o):
                pieces.append('"inf"' if o > 0 else '"-inf"')
            else:
                pieces.append(repr(o))
        elif isinstance(o, str):
            pieces.append(json.dumps(o))
        elif isinstance(o, (list, tuple)):
            pieces.append("[")
            for i, item in enumerate(o):
                if i:
                    pieces.append(", ")
                emit(item)
            pieces.append("]")
        elif isinstance(o, dict):
            pieces.append("{")
            for i, key in enumerate(sorted(o)):
                if i:
                    pieces.append(", ")
                pieces.append(json.dumps(str(key)))
                pieces.append(": ")
                emit(o[key])
            pieces.append("}")
        else:
            raise TypeError(f"unserializable value of type {type(o)}")

    emit(obj)
    return "".join(pieces)


def _clean(value):
    """Recursively convert report values to serializable primitives."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "__dataclass_fields__"):
        return _clean(asdict(value))
    return value


# ---------------------------------------------------------------------------
# strict config handling


def _check_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {sorted(missing)}")


def _as_int(cfg, key, default=None, minimum=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing integer key '{key}'")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"'{key}' must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"'{key}' must be >= {minimum}, got {v}")
    return v


def _as_number(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing numeric key '{key}'")
        return default
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {v!r}")
    return float(v)


def _as_bool(cfg, key, default=False):
    v = cfg.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"'{key}' must be a boolean, got {v!r}")
    return v


def _parse_params(obj, where="params"):
    _check_keys(obj, ("n", "lambdas", "betas"), ("lambdas", "betas"), where)
    lambdas = obj["lambdas"]
    betas = obj["betas"]
    if not isinstance(lambdas, list) or not isinstance(betas, list):
        raise ConfigError(f"{where}: lambdas and betas must be arrays")
    n = obj.get("n", len(lambdas))
    try:
        return validate_params(n, lambdas, betas)
    except CascadeSyncError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _params_doc(params):
    return {"n": params.n, "lambdas": list(params.lambdas),
            "betas": list(params.betas), "z": params.z, "b": list(params.b)}


def _parse_contour_cfg(obj, params):
    _check_keys(obj, ("a", "b", "delta"), (), "contour")
    a = _as_number(obj, "a", 1.0)
    b = _as_number(obj, "b", 1.0)
    delta = obj.get("delta", "auto")
    if delta == "auto":
        delta = auto_tune_delta(params, a, b)
    elif isinstance(delta, bool) or not isinstance(delta, (int, float)):
        raise ConfigError(f"contour delta must be a number or \"auto\", "
                          f"got {delta!r}")
    return build_contour(a, b, float(delta))


_GLOBAL_KEYS = ("command", "params", "seed", "output", "csv")


def _load_config(path, command, extra_allowed, required,
                 needs_params=True, allow_csv=False):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    allowed = set(_GLOBAL_KEYS) | set(extra_allowed)
    if not allow_csv:
        allowed.discard("csv")
    if not needs_params:
        allowed.discard("params")
    _check_keys(cfg, allowed, required, "config")
    if "command" in cfg and cfg["command"] != command:
        raise ConfigError(
            f"config command {cfg['command']!r} does not match {command!r}")
    seed = _as_int(cfg, "seed", default=0)
    return cfg, seed


def _write_outputs(cfg, report, csv_rows=None):
    text = dumps_report(_clean(report)) + "\n"
    out = cfg.get("output")
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    csv_path = cfg.get("csv")
    if csv_path is not None and csv_rows is not None:
        with open(csv_path, "w", encoding="utf-8") as fh:
            for row in csv_rows:
                fh.write(",".join(str(c) for c in row) + "\n")


# ---------------------------------------------------------------------------
# command handlers


def _cmd_speeds(path):
    cfg, seed = _load_config(
        path, "speeds",
        ("steps", "replicas", "exact_gaps", "burn_in", "tolerance"),
        ("params", "steps", "replicas"), allow_csv=True)
    params = _parse_params(cfg["params"])
    steps = _as_int(cfg, "steps", minimum=1)
    replicas = _as_int(cfg, "replicas", minimum=1)
    exact_gaps = _as_bool(cfg, "exact_gaps")
    burn_in = _as_int(cfg, "burn_in", default=0, minimum=0)
    tolerance = _as_number(cfg, "tolerance", 0.02)
    report = estimate_speeds(params, steps, replicas, seed,
                             exact_gaps=exact_gaps, burn_in=burn_in)
    try:
        predicted = list(decompose_groups(params).predicted_speeds)
    except CascadeSyncError:
        predicted = None
    agree = None
    if predicted is not None:
        agree = []
        for j in range(params.n):
            ci = report.ci_half_width[j]
            slack = max(tolerance * predicted[j],
                        ci if math.isfinite(ci) else 0.0)
            agree.append(abs(report.v_hat[j] - predicted[j]) <= slack)
    doc = {
        "command": "speeds",
        "config": {"params": _params_doc(params), "seed": seed,
                   "steps": steps, "replicas": replicas,
                   "exact_gaps": exact_gaps, "burn_in": burn_in,
                   "tolerance": tolerance},
        "results": {
            "v_hat": list(report.v_hat),
            "ci_half_width": list(report.ci_half_width),
            "elapsed_model_time": list(report.elapsed_model_time),
            "predicted_speeds": predicted,
            "agreement": agree,
        },
    }
    rows = [("processor", "v_hat", "ci_half_width", "predicted", "agree")]
    for j in range(params.n):
        rows.append((j + 1, repr(report.v_hat[j]),
                     repr(report.ci_half_width[j]),
                     "" if predicted is None else repr(predicted[j]),
                     "" if agree is None else agree[j]))
    _write_outputs(cfg, doc, rows)
    return 0 if agree is None or all(agree) else 1


def _cmd_simulate(path):
    cfg, seed = _load_config(path, "simulate", ("horizon",),
                             ("params", "horizon"))
    params = _parse_params(cfg["params"])
    horizon = _as_number(cfg, "horizon")
    report = run_event_sim(params, horizon, seed)
    doc = {
        "command": "simulate",
        "config": {"params": _params_doc(params), "seed": seed,
                   "horizon": horizon},
        "results": {
            "final_x": list(report.final_x),
            "v_hat": list(report.v_hat),
            "events": report.events,
            "ticks": list(report.ticks),
            "messages_sent": list(report.messages_sent),
            "rollback_depth_histogram": list(report.rollback_depths),
        },
    }
    _write_outputs(cfg, doc)
    return 0


def _cmd_groups(path):
    cfg, seed = _load_config(path, "groups", (), ("params",))
    params = _parse_params(cfg["params"])
    partition = decompose_groups(params)
    doc = {
        "command": "groups",
        "config": {"params": _params_doc(params), "seed": seed},
        "results": {
            "boundaries": list(partition.boundaries),
            "groups": [list(g) for g in partition.groups],
            "predicted_speeds": list(partition.predicted_speeds),
        },
    }
    _write_outputs(cfg, doc)
    return 0


def _cmd_drift(path):
    cfg, seed = _load_config(path, "drift", ("contour", "radii"),
                             ("params", "contour", "radii"), allow_csv=True)
    params = _parse_params(cfg["params"])
    radii = cfg["radii"]
    _check_keys(radii, ("c0", "c1"), ("c0", "c1"), "radii")
    contour = _parse_contour_cfg(cfg["contour"], params)
    report = drift_report(params, contour,
                          _as_number(radii, "c0"), _as_number(radii, "c1"))
    doc = {
        "command": "drift",
        "config": {"params": _params_doc(params), "seed": seed,
                   "contour": {"a": contour.a, "b": contour.b,
                               "delta": contour.delta},
                   "radii": {"c0": report.c0, "c1": report.c1}},
        "results": {
            "verdict": report.verdict,
            "worst_drift": report.worst_drift,
            "worst_point": list(report.worst_point),
            "epsilon": report.epsilon,
            "annulus_points": report.annulus_points,
            "finite_set_points": report.inner_points,
            "finite_set_sup": report.inner_sup,
            "finite_set_sup_point": list(report.inner_sup_point),
            "contour": {"u2": contour.u2, "u3": contour.u3,
                        "t2": list(contour.t2), "t3": list(contour.t3)},
            "regions": [
                {"region": r.region, "points": r.points,
                 "max_full_drift": r.max_full_drift,
                 "max_free_drift": r.max_free_drift,
                 "max_rollback_drift": r.max_rollback_drift,
                 "argmax": list(r.argmax)}
                for r in report.regions
            ],
        },
    }
    rows = [("region", "points", "max_full_drift", "max_free_drift",
             "max_rollback_drift", "argmax_y2", "argmax_y3")]
    for r in report.regions:
        rows.append((r.region, r.points, repr(r.max_full_drift),
                     repr(r.max_free_drift), repr(r.max_rollback_drift),
                     r.argmax[0], r.argmax[1]))
    _write_outputs(cfg, doc, rows)
    return 0 if report.verdict else 1


def _cmd_couple(path):
    cfg, seed = _load_config(
        path, "couple", ("params_lo", "params_hi", "horizon", "runs"),
        ("params_lo", "params_hi", "horizon"), needs_params=False)
    lo = _parse_params(cfg["params_lo"], "params_lo")
    hi = _parse_params(cfg["params_hi"], "params_hi")
    horizon = _as_number(cfg, "horizon")
    runs = _as_int(cfg, "runs", default=1, minimum=1)
    report = coupled_run(lo, hi, horizon, seed, runs=runs)
    doc = {
        "command": "couple",
        "config": {"params_lo": _params_doc(lo), "params_hi": _params_doc(hi),
                   "seed": seed, "horizon": horizon, "runs": runs},
        "results": {
            "runs": report.runs,
            "dominance_violations": report.dominance_violations,
            "first_violation_time": report.first_violation_time,
        },
    }
    _write_outputs(cfg, doc)
    return 0 if report.dominance_violations == 0 else 1


def _cmd_kernel_check(path):
    cfg, seed = _load_config(
        path, "kernel-check",
        ("states", "marginal_states", "table_box", "tolerance", "max_n",
         "span"),
        (), needs_params=False)
    states = _as_int(cfg, "states", default=10000, minimum=1)
    marginal_states = _as_int(cfg, "marginal_states", default=1000, minimum=1)
    table_box = _as_int(cfg, "table_box", default=30, minimum=1)
    max_n = _as_int(cfg, "max_n", default=6, minimum=2)
    span = _as_int(cfg, "span", default=20, minimum=1)
    tolerance = _as_number(cfg, "tolerance", 1e-12)
    norm = checks.normalization_sweep(states, seed, n_max=max_n, span=span)
    table = checks.table_sweep(table_box, seed)
    marginal = checks.marginal_sweep(marginal_states, seed, n_max=max_n,
                                     span=span)
    worst = max(norm["max_normalization_residual"],
                norm["max_telescoping_residual"],
                table["max_residual"], marginal["max_residual"])
    doc = {
        "command": "kernel-check",
        "config": {"seed": seed, "states": states,
                   "marginal_states": marginal_states,
                   "table_box": table_box, "max_n": max_n, "span": span,
                   "tolerance": tolerance},
        "results": {"normalization": norm, "table_equivalence": table,
                    "marginal_property": marginal,
                    "worst_residual": worst,
                    "verdict": worst <= tolerance},
    }
    _write_outputs(cfg, doc)
    return 0 if worst <= tolerance else 1


def _cmd_check(path):
    cfg, seed = _load_config(
        path, "check",
        ("criterion", "radius", "test_function", "delta", "contour",
         "inner_radius"),
        ("params", "criterion", "radius"))
    params = _parse_params(cfg["params"])
    criterion = cfg["criterion"]
    radius = _as_number(cfg, "radius")
    config_doc = {"params": _params_doc(params), "seed": seed,
                  "criterion": criterion, "radius": radius}
    if criterion == "foster":
        test_function = cfg.get("test_function", "abs")
        inner = cfg.get("inner_radius")
        if inner is not None:
            inner = _as_number(cfg, "inner_radius")
        config_doc["test_function"] = test_function
        config_doc["inner_radius"] = inner
        if test_function == "abs":
            f = lambda y: float(max(abs(c) for c in y))  # noqa: E731
        elif test_function == "phi":
            contour = _parse_contour_cfg(cfg.get("contour", {}), params)
            config_doc["contour"] = {"a": contour.a, "b": contour.b,
                                     "delta": contour.delta}
            f = lambda y: phi(contour, y)  # noqa: E731
        else:
            raise ConfigError(
                f"test_function must be 'abs' or 'phi', got {test_function!r}")
        result = foster_check(params, f, radius, inner_radius=inner)
    elif criterion == "transience":
        delta = cfg.get("delta", "scan")
        if delta == "scan":
            found = find_transient_delta(params, int(radius))
            if found is None:
                result = transience_check(params, 0.5, radius)
                delta_used = None
            else:
                delta_used, result = found
            config_doc["delta"] = delta_used
        else:
            if isinstance(delta, bool) or not isinstance(delta, (int, float)):
                raise ConfigError("delta must be a number or \"scan\"")
            config_doc["delta"] = float(delta)
            result = transience_check(params, float(delta), radius)
    else:
        raise ConfigError(
            f"criterion must be 'foster' or 'transience', got {criterion!r}")
    doc = {
        "command": "check",
        "config": config_doc,
        "results": {
            "verdict": result.verdict,
            "criterion": result.criterion,
            "domain_size": result.domain_size,
            "worst_drift": result.worst_drift,
            "finite_set_size": result.finite_set_size,
            "finite_set_sup": result.finite_set_sup,
            "finite_set_max_f": result.finite_set_max_f,
        },
    }
    _write_outputs(cfg, doc)
    return 0 if result.verdict else 1


_HANDLERS = {
    "speeds": _cmd_speeds,
    "simulate": _cmd_simulate,
    "groups": _cmd_groups,
    "drift": _cmd_drift,
    "couple": _cmd_couple,
    "kernel-check": _cmd_kernel_check,
    "check": _cmd_check,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cascade-sync",
        description="cascade rollback synchronization lab")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="path to the JSON experiment config")
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CascadeSyncError as exc:
        diagnostic = {"command": args.command,
                      "error": {"type": type(exc).__name__,
                                "message": str(exc)}}
        sys.stdout.write(dumps_report(diagnostic) + "\n")
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
