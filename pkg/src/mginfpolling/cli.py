"""Command-line front end for the polling-system toolkit.

Five subcommands cover the workflow: `analyze` prints the exact
steady-state quantities for a configured system, `simulate` runs the
discrete-event oracle and exports per-replication estimates, `sweep`
re-fits one service or visit law over a parameter grid and tabulates the
resulting sojourn means, `optimize` reports the throughput-optimal visit
order, and `validate` cross-checks the analytic pipeline against closed
forms and simulation on the given config.

Configs are UTF-8 JSON. Distribution records are tagged objects such as
{"type": "exponential", "rate": 1.0}; unknown keys anywhere in the file
are rejected with the offending path spelled out. Queue numbering in
configs and all output is 1-based. Exit codes: 0 success, 1 validation
failure, 2 config or model error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import re
import sys

import numpy as np

from .analytic import (
    QueueSpec,
    SystemSpec,
    cycle_moments,
    derived_quantities,
    end_of_visit_means,
    pgf_eval,
    polling_means,
    sojourn_lst,
    sojourn_lst_exponential,
    sojourn_mean,
    sojourn_mean_exponential,
    weighted_sojourn_mean,
)
from .distributions import (
    Deterministic,
    Discrete,
    Distribution,
    Erlang,
    Exponential,
    HyperExponential,
    MixedErlang,
    fit_two_moments,
)
from .errors import (
    ConfigError,
    DomainError,
    ModelError,
    NumericsError,
    UnsupportedModelError,
)
from .optimizer import (
    CENTRAL_POINT,
    SERIAL,
    TourState,
    brute_force_order,
    optimal_order,
)
from .simulator import SimConfig, _mean_and_stderr, run

__all__ = ["main"]

DEFAULT_S_GRID = (0.1, 0.5, 1.0, 2.0)

_DIST_FIELDS = {
    "exponential": ("rate",),
    "deterministic": ("value",),
    "erlang": ("phases", "rate"),
    "mixed_erlang": ("p", "phases", "rate"),
    "hyperexponential": ("p", "rate1", "rate2"),
    "discrete": ("atoms",),
}


def _check_keys(obj: dict, path: str, allowed, required=()) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(
                f"{path}: unknown key {key!r} (expected one of: "
                f"{', '.join(sorted(allowed))})")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}: missing required key {key!r}")


def _as_number(obj, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {obj!r}")
    return float(obj)


def _as_int(obj, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{path}: expected an integer, got {obj!r}")
    return obj


def _build_distribution(obj, path: str) -> Distribution:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a distribution object, got {obj!r}")
    if "type" not in obj:
        raise ConfigError(f"{path}: missing required key 'type'")
    tag = obj["type"]
    if tag not in _DIST_FIELDS:
        raise ConfigError(
            f"{path}.type: unknown distribution type {tag!r} (expected one "
            f"of: {', '.join(sorted(_DIST_FIELDS))})")
    fields = _DIST_FIELDS[tag]
    _check_keys(obj, path, ("type",) + fields, fields)
    try:
        if tag == "exponential":
            return Exponential(_as_number(obj["rate"], f"{path}.rate"))
        if tag == "deterministic":
            return Deterministic(_as_number(obj["value"], f"{path}.value"))
        if tag == "erlang":
            return Erlang(_as_int(obj["phases"], f"{path}.phases"),
                          _as_number(obj["rate"], f"{path}.rate"))
        if tag == "mixed_erlang":
            return MixedErlang(_as_number(obj["p"], f"{path}.p"),
                               _as_int(obj["phases"], f"{path}.phases"),
                               _as_number(obj["rate"], f"{path}.rate"))
        if tag == "hyperexponential":
            return HyperExponential(_as_number(obj["p"], f"{path}.p"),
                                    _as_number(obj["rate1"], f"{path}.rate1"),
                                    _as_number(obj["rate2"], f"{path}.rate2"))
        atoms = obj["atoms"]
        if not isinstance(atoms, list):
            raise ConfigError(f"{path}.atoms: expected a list of [value, "
                              "probability] pairs")
        pairs = []
        for k, pair in enumerate(atoms):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError(f"{path}.atoms[{k}]: expected a [value, "
                                  "probability] pair")
            pairs.append((_as_number(pair[0], f"{path}.atoms[{k}][0]"),
                          _as_number(pair[1], f"{path}.atoms[{k}][1]")))
        return Discrete(tuple(pairs))
    except (DomainError, ModelError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build_system(obj, path: str = "system") -> SystemSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    _check_keys(obj, path, ("queues",), ("queues",))
    queues_obj = obj["queues"]
    if not isinstance(queues_obj, list):
        raise ConfigError(f"{path}.queues: expected a list of queue objects")
    queues = []
    for k, q in enumerate(queues_obj):
        qpath = f"{path}.queues[{k + 1}]"
        if not isinstance(q, dict):
            raise ConfigError(f"{qpath}: expected a queue object")
        _check_keys(q, qpath,
                    ("arrival_rate", "service", "visit", "switch",
                     "approach", "return"),
                    ("arrival_rate", "service", "visit", "switch"))
        kwargs = {}
        if "approach" in q:
            kwargs["approach"] = _build_distribution(q["approach"],
                                                     f"{qpath}.approach")
        if "return" in q:
            kwargs["return_"] = _build_distribution(q["return"],
                                                    f"{qpath}.return")
        try:
            queues.append(QueueSpec(
                _as_number(q["arrival_rate"], f"{qpath}.arrival_rate"),
                _build_distribution(q["service"], f"{qpath}.service"),
                _build_distribution(q["visit"], f"{qpath}.visit"),
                _build_distribution(q["switch"], f"{qpath}.switch"),
                **kwargs))
        except ModelError as exc:
            raise ConfigError(f"{qpath}: {exc}") from exc
    try:
        return SystemSpec(tuple(queues))
    except ModelError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build_sim(obj, path: str, n_queues: int) -> SimConfig:
    if obj is None:
        return SimConfig()
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    allowed = ("warmup_cycles", "measured_cycles", "replications",
               "master_seed", "collect_polling", "collect_visit_end",
               "collect_sojourn", "collect_throughput", "pgf_points")
    _check_keys(obj, path, allowed)
    kwargs = {}
    for key in allowed[:4]:
        if key in obj:
            kwargs[key] = _as_int(obj[key], f"{path}.{key}")
    for key in allowed[4:8]:
        if key in obj:
            if not isinstance(obj[key], bool):
                raise ConfigError(f"{path}.{key}: expected true or false")
            kwargs[key] = obj[key]
    if "pgf_points" in obj:
        points = []
        if not isinstance(obj["pgf_points"], list):
            raise ConfigError(f"{path}.pgf_points: expected a list of "
                              "[queue, [z, ...]] pairs")
        for k, pair in enumerate(obj["pgf_points"]):
            ppath = f"{path}.pgf_points[{k}]"
            if not isinstance(pair, list) or len(pair) != 2 \
                    or not isinstance(pair[1], list):
                raise ConfigError(f"{ppath}: expected [queue, [z, ...]]")
            queue = _as_int(pair[0], f"{ppath}[0]")
            if not 1 <= queue <= n_queues:
                raise ConfigError(f"{ppath}[0]: queue {queue} out of range "
                                  f"1..{n_queues}")
            zs = tuple(_as_number(z, f"{ppath}[1][{j}]")
                       for j, z in enumerate(pair[1]))
            if len(zs) != n_queues:
                raise ConfigError(f"{ppath}[1]: expected {n_queues} z values")
            points.append((queue - 1, zs))
        kwargs["pgf_points"] = tuple(points)
    try:
        return SimConfig(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


_SWEEP_TARGETS = ("service_mean", "service_scv", "visit_mean", "visit_scv")


@dataclasses.dataclass(frozen=True)
class _SweepSpec:
    queue: int  # 0-based
    target: str
    grid: tuple[float, ...]


def _build_sweep(obj, path: str, n_queues: int) -> _SweepSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object (the config needs a "
                          "'sweep' block for this command)")
    _check_keys(obj, path, ("queue", "target", "grid"),
                ("queue", "target", "grid"))
    queue = _as_int(obj["queue"], f"{path}.queue")
    if not 1 <= queue <= n_queues:
        raise ConfigError(f"{path}.queue: queue {queue} out of range "
                          f"1..{n_queues}")
    target = obj["target"]
    if target not in _SWEEP_TARGETS:
        raise ConfigError(f"{path}.target: unknown target {target!r} "
                          f"(expected one of: {', '.join(_SWEEP_TARGETS)})")
    grid_obj = obj["grid"]
    if isinstance(grid_obj, list):
        grid = tuple(_as_number(g, f"{path}.grid[{k}]")
                     for k, g in enumerate(grid_obj))
    elif isinstance(grid_obj, dict):
        _check_keys(grid_obj, f"{path}.grid", ("start", "stop", "points"),
                    ("start", "stop", "points"))
        start = _as_number(grid_obj["start"], f"{path}.grid.start")
        stop = _as_number(grid_obj["stop"], f"{path}.grid.stop")
        points = _as_int(grid_obj["points"], f"{path}.grid.points")
        if points < 2:
            raise ConfigError(f"{path}.grid.points: need at least 2 points")
        grid = tuple(float(g) for g in np.linspace(start, stop, points))
    else:
        raise ConfigError(f"{path}.grid: expected a list of values or a "
                          "start/stop/points object")
    if not grid:
        raise ConfigError(f"{path}.grid: grid must not be empty")
    return _SweepSpec(queue=queue - 1, target=target, grid=grid)


@dataclasses.dataclass(frozen=True)
class _OptimizeSpec:
    counts: tuple[int, ...]
    mode: str
    objective: str


def _build_optimize(obj, path: str, n_queues: int) -> _OptimizeSpec:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object (the config needs an "
                          "'optimize' block for this command)")
    _check_keys(obj, path, ("counts", "mode", "objective"), ("counts",))
    counts_obj = obj["counts"]
    if not isinstance(counts_obj, list) or len(counts_obj) != n_queues:
        raise ConfigError(f"{path}.counts: expected a list of {n_queues} "
                          "nonnegative integers")
    counts = tuple(_as_int(c, f"{path}.counts[{k}]")
                   for k, c in enumerate(counts_obj))
    mode = obj.get("mode", SERIAL)
    if mode not in (SERIAL, CENTRAL_POINT):
        raise ConfigError(f"{path}.mode: expected {SERIAL!r} or "
                          f"{CENTRAL_POINT!r}, got {mode!r}")
    objective = obj.get("objective", "max")
    if objective not in ("max", "min"):
        raise ConfigError(f"{path}.objective: expected 'max' or 'min', "
                          f"got {objective!r}")
    return _OptimizeSpec(counts=counts, mode=mode, objective=objective)


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} "
                          f"column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _check_keys(raw, "config", ("system", "sim", "sweep", "optimize"),
                ("system",))
    return raw


def _thread_count(replications: int) -> int:
    threads = min(replications, os.cpu_count() or 1)
    cap = os.environ.get("POLLING_NUM_THREADS")
    if cap is not None:
        try:
            cap_value = int(cap)
        except ValueError:
            raise ConfigError(
                f"POLLING_NUM_THREADS must be a positive integer, got {cap!r}")
        if cap_value < 1:
            raise ConfigError(
                f"POLLING_NUM_THREADS must be a positive integer, got {cap!r}")
        threads = min(threads, cap_value)
    return threads


def _cell(value) -> str:
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def _write_csv(out_path: str | None, header, rows) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([c if isinstance(c, str) else _cell(c) for c in row])
    text = buffer.getvalue()
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _parse_s_grid(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--s-grid must be comma-separated numbers, "
                          f"got {text!r}")
    if any(s < 0 or not math.isfinite(s) for s in grid):
        raise ConfigError("--s-grid values must be finite and >= 0")
    return grid


def _atomic_pgf_supported(system: SystemSpec) -> bool:
    return all(q.visit.atoms is not None and q.switch.atoms is not None
               for q in system.queues)


def cmd_analyze(args) -> int:
    raw = _load_config(args.config)
    system = _build_system(raw["system"])
    n = len(system.queues)
    s_grid = _parse_s_grid(args.s_grid) if args.s_grid else DEFAULT_S_GRID

    derived = [derived_quantities(system, i) for i in range(n)]
    pm = polling_means(system)
    cm = cycle_moments(system)
    means = [sojourn_mean(system, i) for i in range(n)]
    lst_table = [[sojourn_lst(system, i, s) for i in range(n)] for s in s_grid]

    print(f"system: {n} queues, mean cycle {cm.cycle_mean:.10g}")
    print()
    print("queue  arrival_rate  completion_prob  leftover_mean")
    for i, (q, d) in enumerate(zip(system.queues, derived)):
        print(f"{i + 1:>5}  {q.arrival_rate:>12.10g}  "
              f"{d.completion_prob:>15.10g}  {d.leftover_arrival_mean:>13.10g}")
    print()
    print("queue-length means at polling instants (row: polled queue):")
    for i in range(n):
        print("  " + "  ".join(f"{pm.at_polling[i, j]:>12.10g}"
                               for j in range(n)))
    print()
    print("queue-length means at visit ends (row: finished queue):")
    for i in range(n):
        print("  " + "  ".join(f"{pm.at_visit_end[i, j]:>12.10g}"
                               for j in range(n)))
    print()
    print("queue  sojourn_mean  mean_count_at_any_time")
    for i in range(n):
        print(f"{i + 1:>5}  {means[i]:>12.10g}  "
              f"{system.queues[i].arrival_rate * means[i]:>22.10g}")
    print()
    print("sojourn transform samples (rows: s):")
    print("     s  " + "  ".join(f"{'queue ' + str(i + 1):>12}"
                                 for i in range(n)))
    for s, row in zip(s_grid, lst_table):
        print(f"{s:>6.4g}  " + "  ".join(f"{v:>12.10g}" for v in row))

    if args.out:
        rows = []
        for i in range(n):
            rows.append((f"completion_prob[{i + 1}]", derived[i].completion_prob))
            rows.append((f"leftover_mean[{i + 1}]",
                         derived[i].leftover_arrival_mean))
        for i in range(n):
            for j in range(n):
                rows.append((f"polling_mean[{i + 1},{j + 1}]",
                             pm.at_polling[i, j]))
        for i in range(n):
            for j in range(n):
                rows.append((f"visit_end_mean[{i + 1},{j + 1}]",
                             pm.at_visit_end[i, j]))
        for i in range(n):
            rows.append((f"sojourn_mean[{i + 1}]", means[i]))
            rows.append((f"mean_count[{i + 1}]",
                         system.queues[i].arrival_rate * means[i]))
        for s, row in zip(s_grid, lst_table):
            for i in range(n):
                rows.append((f"sojourn_lst[{i + 1}]@s={s:g}", row[i]))
        _write_csv(args.out, ("metric", "value"), rows)
    return 0


def cmd_simulate(args) -> int:
    raw = _load_config(args.config)
    system = _build_system(raw["system"])
    sim = _build_sim(raw.get("sim"), "sim", len(system.queues))
    if args.seed is not None:
        sim = dataclasses.replace(sim, master_seed=args.seed)
    if args.cycles is not None:
        sim = dataclasses.replace(sim, measured_cycles=args.cycles)
    threads = _thread_count(sim.replications)

    report = run(system, sim, threads=threads)

    print(f"simulated {sim.replications} replications x "
          f"{sim.measured_cycles} cycles (warmup {sim.warmup_cycles}, "
          f"seed {sim.master_seed}, {threads} worker(s))")
    print()
    print(f"{'metric':<34}  {'estimate':>14}  {'stderr':>12}")
    for metric, values in report.per_replication.items():
        mean, se = _mean_and_stderr(values)
        print(f"{metric:<34}  {float(mean):>14.8g}  {float(se):>12.4g}")

    if args.out:
        rows = []
        for metric, values in report.per_replication.items():
            for r, value in enumerate(values):
                rows.append((str(r + 1), metric, value, ""))
            mean, se = _mean_and_stderr(values)
            rows.append(("all", metric, float(mean), float(se)))
        _write_csv(args.out, ("replication", "metric", "estimate", "stderr"),
                   rows)
    return 0


def _sweep_row(system: SystemSpec, spec: _SweepSpec, value: float):
    queue = system.queues[spec.queue]
    law = queue.service if spec.target.startswith("service") else queue.visit
    if spec.target.endswith("mean"):
        mean, scv = value, law.scv()
    else:
        mean, scv = law.mean(), value
    try:
        fitted = fit_two_moments(mean, scv)
    except (DomainError, ModelError) as exc:
        raise ModelError(f"grid value {value:g}: {exc}") from exc
    field = "service" if spec.target.startswith("service") else "visit"
    new_queue = dataclasses.replace(queue, **{field: fitted})
    queues = list(system.queues)
    queues[spec.queue] = new_queue
    swept = SystemSpec(tuple(queues))
    per_queue = [sojourn_mean(swept, i) for i in range(len(queues))]
    return weighted_sojourn_mean(swept), per_queue


def cmd_sweep(args) -> int:
    raw = _load_config(args.config)
    system = _build_system(raw["system"])
    n = len(system.queues)
    spec = _build_sweep(raw.get("sweep"), "sweep", n)

    header = ("grid_value", "ES_weighted") + tuple(f"ES[{i + 1}]"
                                                   for i in range(n))
    rows = []
    for value in spec.grid:
        weighted, per_queue = _sweep_row(system, spec, value)
        rows.append((value, weighted) + tuple(per_queue))
    _write_csv(args.out, header, rows)
    return 0


def cmd_optimize(args) -> int:
    raw = _load_config(args.config)
    system = _build_system(raw["system"])
    n = len(system.queues)
    spec = _build_optimize(raw.get("optimize"), "optimize", n)
    objective = args.objective or spec.objective
    try:
        state = TourState(spec.counts, mode=spec.mode)
    except DomainError as exc:
        raise ConfigError(f"optimize.counts: {exc}") from exc
    try:
        report = optimal_order(system, state, objective)
    except UnsupportedModelError as exc:
        raise ConfigError(f"optimize: {exc}") from exc

    display = tuple(q + 1 for q in report.order)
    print(f"mode: {spec.mode}   objective: {objective}")
    print(f"initial counts: {list(spec.counts)}")
    print()
    print("queue  index_value")
    for i in range(n):
        marker = "" if i in report.order else "  (not visited)"
        print(f"{i + 1:>5}  {report.index_values[i]:>11.10g}{marker}")
    tied = len({round(v, 12) for v in report.index_values[list(report.order)]}) \
        < len(report.order) if report.order else False
    print()
    print(f"optimal order: {' -> '.join(str(q) for q in display) or '(empty)'}"
          + ("   (ties present: tied queues may be permuted freely)"
             if tied else ""))
    print(f"expected services in the tour: {report.total:.10g}")
    print(f"order-invariant part: {report.constant:.10g}")
    print()
    print("queue  expected_services")
    for i in range(n):
        print(f"{i + 1:>5}  {report.per_queue[i]:>17.10g}")

    if args.brute_force:
        result = brute_force_order(system, state, objective)
        print()
        print(f"exhaustive ranking ({len(result.ranking)} orders):")
        ranking = result.ranking
        shown = ranking if len(ranking) <= 24 else ranking[:10]
        for order, value in shown:
            label = " -> ".join(str(q + 1) for q in order) or "(empty)"
            print(f"  {value:>14.10g}  {label}")
        if len(ranking) > 24:
            print(f"  ... {len(ranking) - 20} more ...")
            for order, value in ranking[-10:]:
                label = " -> ".join(str(q + 1) for q in order)
                print(f"  {value:>14.10g}  {label}")
        if args.out:
            rows = [(" -> ".join(str(q + 1) for q in order) or "(empty)", value)
                    for order, value in ranking]
            _write_csv(args.out, ("order", "expected_services"), rows)
    elif args.out:
        rows = [(f"index[{i + 1}]", report.index_values[i]) for i in range(n)]
        rows.append(("order", " -> ".join(str(q) for q in display)))
        rows.append(("expected_services", report.total))
        _write_csv(args.out, ("metric", "value"), rows)
    return 0


def _validate_checks(system: SystemSpec, sim: SimConfig, scale: float,
                     threads: int):
    """Yield (check name, tolerance, measured value) triples."""
    n = len(system.queues)
    means = [sojourn_mean(system, i) for i in range(n)]

    for i in range(n):
        yield (f"sojourn_lst_at_zero[{i + 1}]", 1e-12 * scale,
               abs(sojourn_lst(system, i, 0.0) - 1.0))
    h = 1e-6
    for i in range(n):
        slope = (1.0 - sojourn_lst(system, i, h)) / h
        yield (f"sojourn_lst_slope_vs_mean[{i + 1}]", 1e-4 * scale,
               abs(slope - means[i]) / means[i])

    if all(isinstance(q.service, Exponential) and isinstance(q.visit, Exponential)
           for q in system.queues):
        for i in range(n):
            closed = sojourn_mean_exponential(system, i)
            dev = abs(means[i] - closed) / closed
            for s in DEFAULT_S_GRID:
                a = sojourn_lst(system, i, s)
                b = sojourn_lst_exponential(system, i, s)
                dev = max(dev, abs(a - b) / b)
            yield (f"memoryless_closed_form[{i + 1}]", 1e-8 * scale, dev)

    if _atomic_pgf_supported(system):
        pm = polling_means(system)
        for i in range(n):
            ones = np.ones(n)
            yield (f"pgf_normalization[{i + 1}]", 1e-12 * scale,
                   abs(pgf_eval(system, i, ones) - 1.0))
            worst = 0.0
            for j in range(n):
                target = pm.at_polling[i, j]
                if target <= 0.0:
                    continue
                z = np.ones(n)
                z[j] = 1.0 - h
                grad = (1.0 - pgf_eval(system, i, z)) / h
                worst = max(worst, abs(grad - target) / target)
            yield (f"pgf_gradient_vs_means[{i + 1}]", 1e-4 * scale, worst)

    report = run(system, sim, threads=threads)
    if report.replications >= 2:
        pm = polling_means(system)
        em = end_of_visit_means(system)
        with np.errstate(invalid="ignore", divide="ignore"):
            zx = np.abs(report.polling_means - pm.at_polling) \
                / report.polling_stderr
            zy = np.abs(report.visit_end_means - em) / report.visit_end_stderr
        yield ("sim_polling_means_z", 3.0 * scale, float(np.nanmax(zx)))
        yield ("sim_visit_end_means_z", 3.0 * scale, float(np.nanmax(zy)))
        for i in range(n):
            if system.queues[i].arrival_rate > 0.0 \
                    and np.isfinite(report.sojourn_stderr[i]) \
                    and report.sojourn_stderr[i] > 0.0:
                z = abs(report.sojourn_means[i] - means[i]) \
                    / report.sojourn_stderr[i]
                yield (f"sim_sojourn_mean_z[{i + 1}]", 3.0 * scale, z)
            p = derived_quantities(system, i).completion_prob
            if np.isfinite(report.completion_stderr[i]) \
                    and report.completion_stderr[i] > 0.0:
                z = abs(report.completion_fraction[i] - p) \
                    / report.completion_stderr[i]
                yield (f"sim_completion_fraction_z[{i + 1}]", 3.0 * scale, z)
        total_rate = sum(q.arrival_rate for q in system.queues)
        if total_rate > 0.0 and report.throughput_stderr \
                and report.throughput_stderr > 0.0:
            target = total_rate * cycle_moments(system).cycle_mean
            z = abs(report.throughput_mean - target) / report.throughput_stderr
            yield ("sim_throughput_z", 3.0 * scale, z)


def cmd_validate(args) -> int:
    raw = _load_config(args.config)
    system = _build_system(raw["system"])
    sim = _build_sim(raw.get("sim"), "sim", len(system.queues))
    if args.seed is not None:
        sim = dataclasses.replace(sim, master_seed=args.seed)
    if args.cycles is not None:
        sim = dataclasses.replace(sim, measured_cycles=args.cycles)
    threads = _thread_count(sim.replications)
    scale = args.tolerance_scale

    failures = 0
    rows = []
    print(f"{'check':<34}  {'tolerance':>10}  {'measured':>12}  status")
    for name, tol, measured in _validate_checks(system, sim, scale, threads):
        ok = measured <= tol
        failures += 0 if ok else 1
        status = "PASS" if ok else "FAIL"
        rows.append((name, tol, measured, status))
        print(f"{name:<34}  {tol:>10.3g}  {measured:>12.5g}  {status}")
    if args.out:
        _write_csv(args.out, ("check", "tolerance", "measured", "status"),
                   rows)
    if failures:
        print(f"\n{failures} check(s) failed")
        return 1
    print("\nall checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mginfpolling",
        description="Exact analysis, simulation, and visit-order "
                    "optimization for polling systems of infinite-server "
                    "queues with random visit times.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True,
                       help="path to the JSON config file")
        p.add_argument("--out", help="write CSV output to this path")

    p = sub.add_parser("analyze",
                       help="print exact steady-state quantities")
    add_common(p)
    p.add_argument("--s-grid",
                   help="comma-separated transform sample points "
                        "(default 0.1,0.5,1,2)")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("simulate", help="run the discrete-event oracle")
    add_common(p)
    p.add_argument("--seed", type=int, help="override sim.master_seed")
    p.add_argument("--cycles", type=int, help="override sim.measured_cycles")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sweep",
                       help="tabulate sojourn means over a parameter grid")
    add_common(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("optimize", help="report the optimal visit order")
    add_common(p)
    p.add_argument("--objective", choices=("max", "min"),
                   help="override optimize.objective")
    p.add_argument("--brute-force", action="store_true",
                   help="also scan all orders exhaustively (<= 9 queues)")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("validate",
                       help="cross-check analytics against closed forms "
                            "and simulation")
    add_common(p)
    p.add_argument("--seed", type=int, help="override sim.master_seed")
    p.add_argument("--cycles", type=int, help="override sim.measured_cycles")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every tolerance by this factor "
                            "(< 1 tightens the checks)")
    p.set_defaults(handler=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ModelError, DomainError, NumericsError) as exc:
        # library internals number queues from 0; everything user-facing is
        # 1-based
        message = re.sub(r"\bqueue (\d+)\b",
                         lambda m: f"queue {int(m.group(1)) + 1}", str(exc))
        print(f"error: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
