"""Discrete-event simulation oracle for the cyclic polling model.

The simulator tracks every customer individually and replays the model
mechanics literally: at each polling instant every waiting customer draws a
fresh service requirement and completes during the visit exactly when the
requirement fits inside the visit time; customers arriving while the server
is present complete exactly when their requirement fits inside the remaining
visit; everybody else keeps waiting. No quantity measured here is assumed
from theory, which is what makes the estimates usable as an independent
cross-check of the analytic layer.

A visit is processed as one batch: within a visit each completion is a
threshold test against the remaining visit time, so no event heap is needed
and there are no event-ordering ties to resolve.

Randomness comes from counter-based Philox streams keyed by (master seed,
replication, queue, purpose), so every replication is an independent,
reproducible stream bundle regardless of how replications are scheduled
across processes. Reports aggregate replication means in replication order,
making results bit-identical for a fixed master seed and any thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import SystemSpec
from .distributions import Distribution
from .errors import DomainError

__all__ = [
    "SERVED_SAME_VISIT",
    "CARRIED_FROM_VISIT",
    "OUTSIDE_VISIT",
    "SimConfig",
    "SimulationReport",
    "SingleCycleEstimate",
    "run",
    "single_cycle_throughput",
    "leftover_after_visit",
]

# sojourn arrival-phase tags
SERVED_SAME_VISIT = 0   # arrived during its queue's visit and finished in it
CARRIED_FROM_VISIT = 1  # arrived during its queue's visit, finished later
OUTSIDE_VISIT = 2       # arrived while the server was elsewhere

# stream purposes within one (replication, queue) bundle
_VISIT, _SWITCH, _COUNT, _SERVICE, _POSITION = range(5)
# salts separating the independent stream families of the two entry points
_RUN_SALT = 0x706F6C6C
_CYCLE_SALT = 0x74686574


@dataclass(frozen=True)
class SimConfig:
    """Run lengths, seeding, and measurement toggles for `run`.

    pgf_points lists (queue, z-vector) pairs; for each, the run estimates the
    joint queue-length generating function at that queue's polling instants.
    """

    warmup_cycles: int = 1_000
    measured_cycles: int = 100_000
    replications: int = 10
    master_seed: int = 0
    collect_polling: bool = True
    collect_visit_end: bool = True
    collect_sojourn: bool = True
    collect_throughput: bool = True
    pgf_points: tuple[tuple[int, tuple[float, ...]], ...] = ()

    def __post_init__(self):
        if self.warmup_cycles < 0:
            raise DomainError("warmup_cycles must be >= 0")
        if self.measured_cycles < 1:
            raise DomainError("measured_cycles must be >= 1")
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise DomainError("master_seed must fit in 64 bits")
        points = tuple((int(q), tuple(float(z) for z in zs))
                       for q, zs in self.pgf_points)
        object.__setattr__(self, "pgf_points", points)


@dataclass(frozen=True)
class SimulationReport:
    """Replication-averaged estimates with across-replication standard errors.

    Matrix estimates are indexed like their analytic counterparts:
    polling_means[i, j] is the queue-j count at queue i's polling instant.
    sojourn_phase_means splits per-queue sojourns by arrival phase
    (SERVED_SAME_VISIT, CARRIED_FROM_VISIT, OUTSIDE_VISIT columns).
    per_replication maps metric names to per-replication value arrays, in a
    fixed insertion order, for tabular export.
    """

    replications: int
    measured_cycles: int
    warmup_cycles: int
    master_seed: int
    polling_means: np.ndarray | None
    polling_stderr: np.ndarray | None
    visit_end_means: np.ndarray | None
    visit_end_stderr: np.ndarray | None
    sojourn_means: np.ndarray | None
    sojourn_stderr: np.ndarray | None
    sojourn_phase_means: np.ndarray | None
    sojourn_phase_counts: np.ndarray | None
    completion_fraction: np.ndarray | None
    completion_stderr: np.ndarray | None
    throughput_mean: float | None
    throughput_stderr: float | None
    per_queue_throughput: np.ndarray | None
    pgf_estimates: np.ndarray | None
    pgf_stderr: np.ndarray | None
    per_replication: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


class _Stream:
    """Buffered draws from one law on one dedicated generator."""

    __slots__ = ("law", "rng", "buf", "pos", "chunk")

    def __init__(self, law: Distribution, rng: np.random.Generator,
                 chunk: int = 4096):
        self.law = law
        self.rng = rng
        self.chunk = chunk
        self.buf = ()
        self.pos = 0

    def one(self) -> float:
        if self.pos >= len(self.buf):
            self.buf = self.law.sample(self.rng, self.chunk)
            self.pos = 0
        value = self.buf[self.pos]
        self.pos += 1
        return value

    def many(self, count: int) -> np.ndarray:
        if count == 0:
            return _EMPTY
        end = self.pos + count
        if end > len(self.buf):
            self.buf = self.law.sample(self.rng, max(self.chunk, count))
            self.pos = 0
            end = count
        out = self.buf[self.pos:end]
        self.pos = end
        return out


class _Uniforms:
    """Buffered unit-uniform draws."""

    __slots__ = ("rng", "buf", "pos", "chunk")

    def __init__(self, rng: np.random.Generator, chunk: int = 4096):
        self.rng = rng
        self.chunk = chunk
        self.buf = _EMPTY
        self.pos = 0

    def many(self, count: int) -> np.ndarray:
        if count == 0:
            return _EMPTY
        end = self.pos + count
        if end > len(self.buf):
            self.buf = self.rng.random(max(self.chunk, count))
            self.pos = 0
            end = count
        out = self.buf[self.pos:end]
        self.pos = end
        return out


_EMPTY = np.empty(0)


def _generator(master_seed: int, salt: int, rep: int, queue: int,
               purpose: int) -> np.random.Generator:
    seq = np.random.SeedSequence((master_seed, salt, rep, queue, purpose))
    return np.random.Generator(np.random.Philox(seq))


def _simulate_replication(system: SystemSpec, config: SimConfig,
                          rep: int) -> dict:
    """One independent replication; returns raw per-replication accumulators."""
    queues = system.queues
    n = len(queues)
    rates = [q.arrival_rate for q in queues]

    visit = [_Stream(q.visit, _generator(config.master_seed, _RUN_SALT, rep, j, _VISIT))
             for j, q in enumerate(queues)]
    switch = [_Stream(q.switch, _generator(config.master_seed, _RUN_SALT, rep, j, _SWITCH))
              for j, q in enumerate(queues)]
    service = [_Stream(q.service, _generator(config.master_seed, _RUN_SALT, rep, j, _SERVICE))
               for j, q in enumerate(queues)]
    counts_rng = [_generator(config.master_seed, _RUN_SALT, rep, j, _COUNT)
                  for j in range(n)]
    position = [_Uniforms(_generator(config.master_seed, _RUN_SALT, rep, j, _POSITION))
                for j in range(n)]

    # waiting customers per queue: parallel lists of arrival times and tags
    wait_time: list[list[float]] = [[] for _ in range(n)]
    wait_tag: list[list[int]] = [[] for _ in range(n)]

    x_sum = np.zeros((n, n))
    y_sum = np.zeros((n, n))
    sojourn_sum = np.zeros(n)
    sojourn_count = np.zeros(n)
    phase_sum = np.zeros((n, 3))
    phase_count = np.zeros((n, 3))
    present_seen = np.zeros(n)
    present_done = np.zeros(n)
    served_queue = np.zeros(n)
    pgf_sum = np.zeros(len(config.pgf_points))

    collect_sojourn = config.collect_sojourn
    now = 0.0
    total_cycles = config.warmup_cycles + config.measured_cycles
    for cycle in range(total_cycles):
        measuring = cycle >= config.warmup_cycles
        for q in range(n):
            v = visit[q].one()
            if measuring:
                if config.collect_polling:
                    for j in range(n):
                        x_sum[q, j] += len(wait_time[j])
                for k, (pq, zs) in enumerate(config.pgf_points):
                    if pq == q:
                        prod = 1.0
                        for j in range(n):
                            prod *= zs[j] ** len(wait_time[j])
                        pgf_sum[k] += prod

            # waiting customers each draw a fresh requirement against v
            times = wait_time[q]
            tags = wait_tag[q]
            if times:
                if measuring:
                    present_seen[q] += len(times)
                draws = service[q].many(len(times))
                kept_t: list[float] = []
                kept_g: list[int] = []
                for idx in range(len(times)):
                    b = draws[idx]
                    if b <= v:
                        if measuring:
                            present_done[q] += 1
                            served_queue[q] += 1
                            if collect_sojourn:
                                s = now + b - times[idx]
                                tag = tags[idx]
                                sojourn_sum[q] += s
                                sojourn_count[q] += 1
                                phase_sum[q, tag] += s
                                phase_count[q, tag] += 1
                    else:
                        kept_t.append(times[idx])
                        kept_g.append(tags[idx])
                wait_time[q] = kept_t
                wait_tag[q] = kept_g

            # arrivals at the visited queue start service immediately
            if rates[q] > 0.0:
                k = counts_rng[q].poisson(rates[q] * v)
                if k:
                    pos = position[q].many(k)
                    draws = service[q].many(k)
                    t_list = wait_time[q]
                    g_list = wait_tag[q]
                    for idx in range(k):
                        t_a = pos[idx] * v
                        b = draws[idx]
                        if t_a + b <= v:
                            if measuring:
                                served_queue[q] += 1
                                if collect_sojourn:
                                    sojourn_sum[q] += b
                                    sojourn_count[q] += 1
                                    phase_sum[q, SERVED_SAME_VISIT] += b
                                    phase_count[q, SERVED_SAME_VISIT] += 1
                        else:
                            t_list.append(now + t_a)
                            g_list.append(CARRIED_FROM_VISIT)

            # arrivals elsewhere wait for their own visit
            for j in range(n):
                if j != q and rates[j] > 0.0:
                    k = counts_rng[j].poisson(rates[j] * v)
                    if k:
                        pos = position[j].many(k)
                        t_list = wait_time[j]
                        g_list = wait_tag[j]
                        for idx in range(k):
                            t_list.append(now + pos[idx] * v)
                            g_list.append(OUTSIDE_VISIT)

            if measuring and config.collect_visit_end:
                for j in range(n):
                    y_sum[q, j] += len(wait_time[j])
            now += v

            d = switch[q].one()
            if d > 0.0:
                for j in range(n):
                    if rates[j] > 0.0:
                        k = counts_rng[j].poisson(rates[j] * d)
                        if k:
                            pos = position[j].many(k)
                            t_list = wait_time[j]
                            g_list = wait_tag[j]
                            for idx in range(k):
                                t_list.append(now + pos[idx] * d)
                                g_list.append(OUTSIDE_VISIT)
            now += d

    m = float(config.measured_cycles)
    return {
        "polling": x_sum / m,
        "visit_end": y_sum / m,
        "sojourn_sum": sojourn_sum,
        "sojourn_count": sojourn_count,
        "phase_sum": phase_sum,
        "phase_count": phase_count,
        "present_seen": present_seen,
        "present_done": present_done,
        "served_per_cycle": served_queue / m,
        "pgf": pgf_sum / m,
    }


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(np.shape(num), np.nan)
    mask = np.asarray(den) > 0
    out[mask] = np.asarray(num)[mask] / np.asarray(den)[mask]
    return out


def _mean_and_stderr(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Replication mean and standard error along axis 0, nan-tolerant."""
    arr = np.asarray(stack, dtype=float)
    valid = ~np.isnan(arr)
    counts = valid.sum(axis=0)
    filled = np.where(valid, arr, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(counts > 0, filled.sum(axis=0) / np.maximum(counts, 1),
                        np.nan)
        centered = np.where(valid, arr - mean, 0.0)
        var = centered ** 2
        ssq = var.sum(axis=0)
        spread = np.sqrt(ssq / np.maximum(counts - 1, 1))
        stderr = np.where(counts > 1, spread / np.sqrt(np.maximum(counts, 1)),
                          np.nan)
    return mean, stderr


def run(system: SystemSpec, config: SimConfig, threads: int = 1) -> SimulationReport:
    """Simulate the system and estimate every measured quantity.

    Parameters
    ----------
    threads : int
        Number of worker processes for replications. Estimates are
        bit-identical for any value, since each replication owns
        seed-derived streams and aggregation runs in replication order.
    """
    n = len(system.queues)
    for q, zs in config.pgf_points:
        if not 0 <= q < n:
            raise DomainError(f"pgf point queue index {q} out of range")
        if len(zs) != n:
            raise DomainError("pgf point z-vector length must match queue count")

    reps = config.replications
    if threads > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=min(threads, reps)) as pool:
            futures = [pool.submit(_simulate_replication, system, config, r)
                       for r in range(reps)]
            results = [f.result() for f in futures]
    else:
        results = [_simulate_replication(system, config, r) for r in range(reps)]

    def stack(key):
        return np.stack([res[key] for res in results])

    polling = polling_se = visit_end = visit_end_se = None
    if config.collect_polling:
        polling, polling_se = _mean_and_stderr(stack("polling"))
    if config.collect_visit_end:
        visit_end, visit_end_se = _mean_and_stderr(stack("visit_end"))

    sojourn = sojourn_se = phase_means = phase_counts = None
    if config.collect_sojourn:
        per_rep_sojourn = _ratio(stack("sojourn_sum"), stack("sojourn_count"))
        sojourn, sojourn_se = _mean_and_stderr(per_rep_sojourn)
        total_phase_sum = stack("phase_sum").sum(axis=0)
        phase_counts = stack("phase_count").sum(axis=0)
        phase_means = _ratio(total_phase_sum, phase_counts)

    per_rep_phat = _ratio(stack("present_done"), stack("present_seen"))
    phat, phat_se = _mean_and_stderr(per_rep_phat)

    throughput = throughput_se = per_queue_theta = None
    if config.collect_throughput:
        per_rep_theta_queue = stack("served_per_cycle")
        per_queue_theta, _ = _mean_and_stderr(per_rep_theta_queue)
        per_rep_total = per_rep_theta_queue.sum(axis=1)
        t_mean, t_se = _mean_and_stderr(per_rep_total)
        throughput, throughput_se = float(t_mean), float(t_se)

    pgf_est = pgf_se = None
    if config.pgf_points:
        pgf_est, pgf_se = _mean_and_stderr(stack("pgf"))

    per_replication: dict[str, np.ndarray] = {}
    if config.collect_polling:
        for i in range(n):
            for j in range(n):
                per_replication[f"polling_mean[{i + 1},{j + 1}]"] = \
                    stack("polling")[:, i, j]
    if config.collect_visit_end:
        for i in range(n):
            for j in range(n):
                per_replication[f"visit_end_mean[{i + 1},{j + 1}]"] = \
                    stack("visit_end")[:, i, j]
    if config.collect_sojourn:
        per_rep_sojourn = _ratio(stack("sojourn_sum"), stack("sojourn_count"))
        for i in range(n):
            per_replication[f"sojourn_mean[{i + 1}]"] = per_rep_sojourn[:, i]
        per_rep_phase = _ratio(stack("phase_sum"), stack("phase_count"))
        for i in range(n):
            for tag, name in ((SERVED_SAME_VISIT, "served_same_visit"),
                              (CARRIED_FROM_VISIT, "carried_from_visit"),
                              (OUTSIDE_VISIT, "outside_visit")):
                per_replication[f"sojourn_mean_{name}[{i + 1}]"] = \
                    per_rep_phase[:, i, tag]
    for i in range(n):
        per_replication[f"completion_fraction[{i + 1}]"] = per_rep_phat[:, i]
    if config.collect_throughput:
        per_replication["throughput_per_cycle"] = stack("served_per_cycle").sum(axis=1)
        for i in range(n):
            per_replication[f"throughput_per_cycle[{i + 1}]"] = \
                stack("served_per_cycle")[:, i]
    for k, (pq, zs) in enumerate(config.pgf_points):
        zrepr = ",".join(format(z, "g") for z in zs)
        per_replication[f"pgf[q{pq + 1};z={zrepr}]"] = stack("pgf")[:, k]

    return SimulationReport(
        replications=reps,
        measured_cycles=config.measured_cycles,
        warmup_cycles=config.warmup_cycles,
        master_seed=config.master_seed,
        polling_means=polling,
        polling_stderr=polling_se,
        visit_end_means=visit_end,
        visit_end_stderr=visit_end_se,
        sojourn_means=sojourn,
        sojourn_stderr=sojourn_se,
        sojourn_phase_means=phase_means,
        sojourn_phase_counts=phase_counts,
        completion_fraction=phat,
        completion_stderr=phat_se,
        throughput_mean=throughput,
        throughput_stderr=throughput_se,
        per_queue_throughput=per_queue_theta,
        pgf_estimates=pgf_est,
        pgf_stderr=pgf_se,
        per_replication=per_replication,
    )


@dataclass(frozen=True)
class SingleCycleEstimate:
    """Monte Carlo estimate of customers served in one cycle from a fixed state."""

    mean: float
    stderr: float
    per_queue_mean: np.ndarray
    replications: int


def single_cycle_throughput(system: SystemSpec, order, initial_counts,
                            replications: int = 10_000,
                            master_seed: int = 0) -> SingleCycleEstimate:
    """Estimate the expected number of services in one tour from state `initial_counts`.

    The tour follows `order`. For a system without central-point travel laws
    the order must cover all queues and each visit is followed by that
    queue's switch-over; with central-point laws the order may cover any
    subset and each visit is wrapped in its approach and return travel
    times. Customers present at the start and all customers arriving during
    the tour behave exactly as in `run`; completions of both kinds count.
    """
    queues = system.queues
    n = len(queues)
    order = tuple(int(q) for q in order)
    counts = np.asarray(initial_counts, dtype=int)
    if counts.shape != (n,) or np.any(counts < 0):
        raise DomainError(f"initial_counts must be {n} nonnegative integers")
    central = system.has_central_point
    if any(not 0 <= q < n for q in order) or len(set(order)) != len(order):
        raise DomainError("order must list distinct queue indices in range")
    if not central and sorted(order) != list(range(n)):
        raise DomainError("order must visit every queue when the system has "
                          "no central-point travel laws")
    if replications < 1:
        raise DomainError("replications must be >= 1")

    reps = replications
    rep_ids = np.arange(reps)
    served = np.zeros(reps)
    per_queue = np.zeros((n, reps))
    elapsed = np.zeros(reps)

    for q in order:
        spec = queues[q]
        gen = {p: _generator(master_seed, _CYCLE_SALT, 0, q, p) for p in range(5)}
        if central:
            out_rng = _generator(master_seed, _CYCLE_SALT, 1, q, _SWITCH)
            elapsed = elapsed + np.asarray(spec.approach.sample(out_rng, reps),
                                           dtype=float)
        v = np.asarray(spec.visit.sample(gen[_VISIT], reps), dtype=float)
        rate = spec.arrival_rate

        pre_arrivals = gen[_COUNT].poisson(rate * elapsed) if rate > 0 \
            else np.zeros(reps, dtype=int)
        present = counts[q] + pre_arrivals
        total = int(present.sum())
        if total:
            owner = np.repeat(rep_ids, present)
            b = np.asarray(spec.service.sample(gen[_SERVICE], total), dtype=float)
            done = owner[b <= v[owner]]
            add = np.bincount(done, minlength=reps)
            served += add
            per_queue[q] += add

        if rate > 0:
            within = gen[_COUNT].poisson(rate * v)
            total = int(within.sum())
            if total:
                owner = np.repeat(rep_ids, within)
                t_a = gen[_POSITION].random(total) * v[owner]
                b = np.asarray(spec.service.sample(gen[_SERVICE], total), dtype=float)
                done = owner[t_a + b <= v[owner]]
                add = np.bincount(done, minlength=reps)
                served += add
                per_queue[q] += add

        elapsed = elapsed + v
        if central:
            back = np.asarray(spec.return_.sample(
                _generator(master_seed, _CYCLE_SALT, 2, q, _SWITCH), reps), dtype=float)
            elapsed = elapsed + back
        else:
            elapsed = elapsed + np.asarray(spec.switch.sample(gen[_SWITCH], reps),
                                           dtype=float)

    mean = float(served.mean())
    stderr = float(served.std(ddof=1) / math.sqrt(reps)) if reps > 1 else float("nan")
    return SingleCycleEstimate(mean=mean, stderr=stderr,
                               per_queue_mean=per_queue.mean(axis=1),
                               replications=reps)


def leftover_after_visit(arrival_rate: float, service: Distribution,
                         visit: Distribution, replications: int = 10_000,
                         master_seed: int = 0) -> np.ndarray:
    """Counts left behind by single visits to an initially empty queue.

    Each replication plays one visit: the visit time is drawn, customers
    arrive in a Poisson stream over it, each starts service on arrival and
    leaves if the service fits before the visit ends. The returned array
    holds the number still present at the visit end, one entry per
    replication (the raw material for distributional checks).
    """
    if arrival_rate < 0.0:
        raise DomainError("arrival_rate must be >= 0")
    if replications < 1:
        raise DomainError("replications must be >= 1")
    gen = {p: _generator(master_seed, _CYCLE_SALT, 3, 0, p) for p in range(5)}
    v = np.asarray(visit.sample(gen[_VISIT], replications), dtype=float)
    if arrival_rate == 0.0:
        return np.zeros(replications, dtype=int)
    arrivals = gen[_COUNT].poisson(arrival_rate * v)
    total = int(arrivals.sum())
    if total == 0:
        return np.zeros(replications, dtype=int)
    owner = np.repeat(np.arange(replications), arrivals)
    t_a = gen[_POSITION].random(total) * v[owner]
    b = np.asarray(service.sample(gen[_SERVICE], total), dtype=float)
    stay = owner[t_a + b > v[owner]]
    return np.bincount(stay, minlength=replications)
