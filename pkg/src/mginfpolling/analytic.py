"""Steady-state analysis of a cyclic polling system of infinite-server queues.

The model: a single server moves cyclically over N >= 2 queues. At queue i it
stays for a random visit time, then travels for a random switch time to the
next queue. Customers arrive at queue i in a Poisson stream and each carries a
service requirement drawn fresh on every visit: a customer present when the
server arrives completes during that visit exactly when its drawn requirement
fits inside the visit time, and a customer arriving while the server is
present completes exactly when its requirement fits inside the remaining
visit. Uncompleted customers simply wait for the next visit. Service is
infinite-server, so customers never queue for each other.

This module evaluates the stationary performance measures of that model in
closed form or by one-dimensional quadrature: per-queue completion
probabilities and related constants, cycle-length moments, mean queue lengths
at polling and visit-end instants, the joint queue-length generating function
at polling instants (for atomic visit and switch laws), and the sojourn-time
mean and Laplace-Stieltjes transform.

Conventions: queue indices are 0-based everywhere in the library. Optional
central-point travel laws can ride along on a queue spec for tour planning,
but they never alter the cyclic-model quantities computed here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    DEFAULT_QUADRATURE,
    Distribution,
    QuadratureConfig,
    completion_probability,
    expectation,
    expected_min,
    has_atom_at_zero,
    min_lst,
    survival_product_integral,
)
from .errors import (
    DomainError,
    ModelError,
    NumericsError,
    UnsupportedModelError,
)

__all__ = [
    "QueueSpec",
    "SystemSpec",
    "DerivedQueueQuantities",
    "CycleMoments",
    "PollingMeans",
    "SojournMetrics",
    "derived_quantities",
    "cycle_moments",
    "polling_means",
    "end_of_visit_means",
    "pgf_eval",
    "sojourn_mean",
    "sojourn_lst",
    "sojourn_mean_exponential",
    "sojourn_lst_exponential",
    "sojourn_metrics",
    "weighted_sojourn_mean",
]


@dataclass(frozen=True)
class QueueSpec:
    """One queue of the polling system.

    Attributes
    ----------
    arrival_rate : float
        Poisson arrival rate; zero is allowed (a queue nobody visits in
        spirit, still polled by the server).
    service, visit, switch : Distribution
        Service requirement, visit time, and the switch-over time the server
        spends after leaving this queue. Service and visit must not put mass
        at zero; a zero switch-over is fine.
    approach, return_ : Distribution or None
        Optional central-point travel times: outbound from the central point
        to this queue and back. Either both present or both absent. They feed
        tour planning only and leave cyclic-model quantities untouched.
    """

    arrival_rate: float
    service: Distribution
    visit: Distribution
    switch: Distribution
    approach: Distribution | None = None
    return_: Distribution | None = None

    def __post_init__(self):
        rate = float(self.arrival_rate)
        if not (rate >= 0.0) or not math.isfinite(rate):
            raise ModelError(f"arrival_rate must be finite and >= 0, got {rate!r}")
        object.__setattr__(self, "arrival_rate", rate)
        for name in ("service", "visit"):
            law = getattr(self, name)
            if has_atom_at_zero(law):
                raise ModelError(f"{name} law must not put mass at zero")
        if (self.approach is None) != (self.return_ is None):
            raise ModelError(
                "central-point travel times must be given as a pair "
                "(approach and return_) or not at all")


@dataclass(frozen=True)
class SystemSpec:
    """An ordered set of queues; the order is the server's cyclic route."""

    queues: tuple[QueueSpec, ...]

    def __post_init__(self):
        queues = tuple(self.queues)
        object.__setattr__(self, "queues", queues)
        if len(queues) < 2:
            raise ModelError(f"a polling system needs >= 2 queues, got {len(queues)}")
        with_travel = sum(q.approach is not None for q in queues)
        if with_travel not in (0, len(queues)):
            raise ModelError(
                "central-point travel times must be present on every queue "
                "or on none")

    def __len__(self):
        return len(self.queues)

    @property
    def has_central_point(self) -> bool:
        """True when every queue carries central-point travel laws."""
        return self.queues[0].approach is not None


@dataclass(frozen=True)
class DerivedQueueQuantities:
    """Per-queue constants derived from the service and visit laws.

    Attributes
    ----------
    completion_prob : float
        Chance that a customer present at the start of a visit completes
        during it (a tie between requirement and visit counts as completed).
    min_mean : float
        Expected minimum of one service requirement and one visit time.
    leftover_arrival_mean : float
        Expected number of customers that arrive during one visit and are
        still present when it ends; equals arrival_rate times min_mean.
    residual_overshoot_prob : float
        Chance that a requirement exceeds the residual visit seen by a
        customer arriving at a uniformly random moment of a visit.
    mean_failed_visits : float
        Expected number of unsuccessful visits a present customer sits
        through before completing, (1 - completion_prob) / completion_prob.
    """

    completion_prob: float
    min_mean: float
    leftover_arrival_mean: float
    residual_overshoot_prob: float
    mean_failed_visits: float


@dataclass(frozen=True)
class CycleMoments:
    """First and second moments of the cycle and its per-queue remainders.

    cycle_mean is E[C] with C the full tour (all visits plus all
    switch-overs). partial_means[i] is the mean of the cycle with queue i's
    visit removed; partial_second_moments[i] is that quantity's second
    moment, computed from independence of all visit and switch times.
    """

    cycle_mean: float
    partial_means: tuple[float, ...]
    partial_second_moments: tuple[float, ...]


@dataclass(frozen=True)
class PollingMeans:
    """Mean queue lengths at polling and visit-end instants.

    at_polling[i, j] is the expected number of customers in queue j at the
    moment the server arrives at queue i; at_visit_end[i, j] the same at the
    moment the server leaves queue i.
    """

    at_polling: np.ndarray
    at_visit_end: np.ndarray


@dataclass(frozen=True)
class SojournMetrics:
    """Per-queue sojourn means plus a transform table over an s-grid.

    lst_table[i, k] is the sojourn-time Laplace-Stieltjes transform of
    queue i evaluated at s_grid[k].
    """

    means: tuple[float, ...]
    s_grid: tuple[float, ...]
    lst_table: np.ndarray


def _queue_checked(system: SystemSpec, queue: int) -> QueueSpec:
    if not 0 <= queue < len(system.queues):
        raise DomainError(
            f"queue index {queue} out of range for {len(system.queues)} queues")
    return system.queues[queue]


def derived_quantities(system: SystemSpec, queue: int,
                       quad: QuadratureConfig = DEFAULT_QUADRATURE,
                       ) -> DerivedQueueQuantities:
    """Completion probability and companion constants for one queue.

    Raises
    ------
    ModelError
        If the completion probability is zero (service never fits inside a
        visit), since then nothing present is ever served and stationary
        waiting quantities diverge.
    """
    spec = _queue_checked(system, queue)
    p = completion_probability(spec.service, spec.visit, quad)
    if p <= 0.0:
        raise ModelError(
            f"queue {queue}: service never completes within a visit "
            "(completion probability 0)")
    mmin = expected_min(spec.service, spec.visit, quad)
    return DerivedQueueQuantities(
        completion_prob=p,
        min_mean=mmin,
        leftover_arrival_mean=spec.arrival_rate * mmin,
        residual_overshoot_prob=mmin / spec.visit.mean(),
        mean_failed_visits=(1.0 - p) / p,
    )


def cycle_moments(system: SystemSpec) -> CycleMoments:
    """Moments of the cycle length and of the cycle less each queue's visit."""
    visit_means = [q.visit.mean() for q in system.queues]
    visit_vars = [q.visit.variance() for q in system.queues]
    switch_mean = sum(q.switch.mean() for q in system.queues)
    switch_var = sum(q.switch.variance() for q in system.queues)
    cycle_mean = sum(visit_means) + switch_mean
    partial_means = []
    partial_seconds = []
    for i in range(len(system.queues)):
        mean_i = cycle_mean - visit_means[i]
        var_i = sum(visit_vars) - visit_vars[i] + switch_var
        partial_means.append(mean_i)
        partial_seconds.append(var_i + mean_i**2)
    return CycleMoments(cycle_mean, tuple(partial_means), tuple(partial_seconds))


def polling_means(system: SystemSpec,
                  quad: QuadratureConfig = DEFAULT_QUADRATURE) -> PollingMeans:
    """Mean queue lengths at every polling and visit-end instant.

    The diagonal entries balance arrivals over one cycle against the served
    fraction: over a full cycle a queue accumulates its arrival rate times
    the time the server is elsewhere, plus the arrivals during its own visit
    that the visit does not catch, and the visit removes each present
    customer independently with the completion probability. Off-diagonal
    entries follow the server along the cycle, adding arrivals over the
    crossed visit and switch periods.
    """
    queues = system.queues
    n = len(queues)
    rates = [q.arrival_rate for q in queues]
    visit_means = [q.visit.mean() for q in queues]
    switch_means = [q.switch.mean() for q in queues]
    derived = [derived_quantities(system, j, quad) for j in range(n)]
    switch_total = sum(switch_means)
    visit_total = sum(visit_means)

    at_polling = np.zeros((n, n))
    at_end = np.zeros((n, n))
    for j in range(n):
        p = derived[j].completion_prob
        leftover = derived[j].leftover_arrival_mean
        at_polling[j, j] = (rates[j] * (visit_total - visit_means[j])
                            + leftover + rates[j] * switch_total) / p
        at_end[j, j] = (1.0 - p) * at_polling[j, j] + leftover
    for j in range(n):
        for m in range(1, n):
            i = (j + m) % n
            # from the end of queue j's visit the server crosses switch-overs
            # j .. i-1 and visits j+1 .. i-1 before polling queue i
            elapsed = sum(switch_means[(j + r) % n] for r in range(m))
            elapsed += sum(visit_means[(j + r) % n] for r in range(1, m))
            at_polling[i, j] = at_end[j, j] + rates[j] * elapsed
            at_end[i, j] = at_polling[i, j] + rates[j] * visit_means[i]
    return PollingMeans(at_polling=at_polling, at_visit_end=at_end)


def end_of_visit_means(system: SystemSpec,
                       quad: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """Mean queue lengths at visit-end instants; row i is the end of visit i."""
    return polling_means(system, quad).at_visit_end


def pgf_eval(system: SystemSpec, queue: int, z,
             tol: float = 1e-12, max_cycles: int = 500,
             quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Joint queue-length generating function at a polling instant.

    Evaluates E[prod_j z_j^(count in queue j)] at the moment the server
    arrives at the given queue, for systems whose visit and switch laws are
    all atomic (deterministic or finite discrete). The recursion walks the
    cycle backwards: each crossed visit contributes a finite sum over its
    atoms, under which the crossed queue's coordinate is contracted by the
    per-atom survival chance, and each crossed switch-over contributes its
    transform at the arrival-weighted coordinates. Iteration starts from the
    constant function one in the remote past and stops once deeper history
    cannot move the value by more than `tol`.

    Parameters
    ----------
    z : array-like of length N
        Evaluation point; components in [0, 1], with a small overshoot above
        one tolerated so finite differences at one are possible.

    Raises
    ------
    UnsupportedModelError
        If any visit or switch law is not atomic.
    NumericsError
        If the value has not settled within `max_cycles` cycles of history,
        or the memo table grows past an internal safety cap.
    """
    queues = system.queues
    n = len(queues)
    _queue_checked(system, queue)
    z = np.asarray(z, dtype=float)
    if z.shape != (n,):
        raise DomainError(f"z must have shape ({n},), got {z.shape}")
    if np.any(z < 0.0) or np.any(z > 1.02):
        raise DomainError("z components must lie in [0, 1] "
                          "(small overshoot above 1 is allowed)")
    for idx, q in enumerate(queues):
        if q.visit.atoms is None or q.switch.atoms is None:
            raise UnsupportedModelError(
                f"queue {idx}: generating-function evaluation needs atomic "
                "visit and switch laws")
    for j in range(n):
        derived_quantities(system, j, quad)  # rejects completion probability 0

    rates = np.array([q.arrival_rate for q in queues])
    u0 = 1.0 - z
    if not np.any(u0):
        return 1.0

    # per queue: visit atoms decorated with the survival contraction and the
    # expected count of within-visit arrivals left behind
    atom_data: list[tuple[tuple[float, float, float, float], ...]] = []
    offsets = [0]
    for j, q in enumerate(queues):
        rows = []
        for v, w in q.visit.atoms:
            survive = float(q.service.survival(v))
            left = rates[j] * float(q.service.integrated_survival(v))
            rows.append((v, w, survive, left))
        atom_data.append(tuple(rows))
        offsets.append(offsets[-1] + len(rows))
    total_atoms = offsets[-1]
    switch_lst = [q.switch.lst for q in queues]

    prune = min(tol * 1e-3, 1e-15)
    state_cap = 2_000_000
    horizon = max_cycles * n
    zero_counts = (0,) * total_atoms
    memo: dict[tuple[int, tuple[int, ...]], float] = {}
    bottomed = False

    def u_of(counts):
        u = u0.copy()
        for j in range(n):
            for k, (_, _, survive, _) in enumerate(atom_data[j]):
                c = counts[offsets[j] + k]
                if c:
                    u[j] *= survive**c
        return u

    stack = [(horizon, zero_counts)]
    while stack:
        t, counts = stack[-1]
        key = (t, counts)
        if key in memo:
            stack.pop()
            continue
        u = u_of(counts)
        if np.max(np.abs(u)) < prune:
            memo[key] = 1.0
            stack.pop()
            continue
        if t == 0:
            bottomed = True
            memo[key] = 1.0
            stack.pop()
            continue
        prev = (queue + t - 1) % n
        base = offsets[prev]
        children = []
        for k in range(len(atom_data[prev])):
            child = list(counts)
            child[base + k] += 1
            children.append(tuple(child))
        pending = [c for c in children if (t - 1, c) not in memo]
        if pending:
            stack.extend((t - 1, c) for c in pending)
            continue
        lam_dot = float(rates @ u)
        other = lam_dot - rates[prev] * u[prev]
        acc = 0.0
        for k, (v, w, _, left) in enumerate(atom_data[prev]):
            acc += w * math.exp(-v * other - left * u[prev]) * memo[(t - 1, children[k])]
        memo[key] = float(switch_lst[prev](lam_dot)) * acc
        stack.pop()
        if len(memo) > state_cap:
            raise NumericsError(
                "generating-function evaluation exceeded the state cap; "
                "too many distinct visit atoms for this horizon")

    if bottomed:
        raise NumericsError(
            f"generating-function value did not settle within {max_cycles} "
            "cycles of history")
    return memo[(horizon, zero_counts)]


@dataclass(frozen=True)
class _SojournContext:
    """Shared per-queue constants for the sojourn mean and transform."""

    arrival_rate: float
    service: Distribution
    visit: Distribution
    visit_mean: float
    cycle_mean: float
    partial_mean: float
    partial_second: float
    completion_prob: float
    min_mean: float
    overshoot_prob: float
    others: tuple[QueueSpec, ...]


def _sojourn_context(system: SystemSpec, queue: int,
                     quad: QuadratureConfig) -> _SojournContext:
    spec = _queue_checked(system, queue)
    moments = cycle_moments(system)
    derived = derived_quantities(system, queue, quad)
    return _SojournContext(
        arrival_rate=spec.arrival_rate,
        service=spec.service,
        visit=spec.visit,
        visit_mean=spec.visit.mean(),
        cycle_mean=moments.cycle_mean,
        partial_mean=moments.partial_means[queue],
        partial_second=moments.partial_second_moments[queue],
        completion_prob=derived.completion_prob,
        min_mean=derived.min_mean,
        overshoot_prob=derived.residual_overshoot_prob,
        others=tuple(q for j, q in enumerate(system.queues) if j != queue),
    )


def sojourn_mean(system: SystemSpec, queue: int,
                 quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Stationary mean sojourn time of a customer at one queue.

    The arrival moment of a tagged customer falls inside its queue's visit
    with probability visit_mean / cycle_mean and outside it otherwise. An
    in-visit arrival either completes within the residual visit (and stays
    exactly its service requirement) or rides out the residual visit and
    joins the waiting pool; an out-of-visit arrival waits out the residual
    server-elsewhere period first. From a polling instant onward, a waiting
    customer completes in each visit independently with the completion
    probability, so the number of wasted cycles is geometric, and each
    attempt adds the expected minimum of requirement and visit plus, on
    failure, the server-elsewhere remainder of the cycle.
    """
    c = _sojourn_context(system, queue, quad)
    ev, ec = c.visit_mean, c.cycle_mean
    ecmi, ec2mi = c.partial_mean, c.partial_second
    p, emin = c.completion_prob, c.min_mean

    visit_atoms = [a for a, _ in c.visit.atoms] if c.visit.atoms else ()
    served_in_visit = expectation(
        c.service,
        lambda b: b * (1.0 - float(c.visit.integrated_survival(b)) / ev),
        breakpoints=visit_atoms, quad=quad)
    residual_excess = survival_product_integral(
        c.visit, c.service, 0.0, 1, quad) / ev
    from_polling = (ecmi + emin) / p
    in_visit = served_in_visit + residual_excess + c.overshoot_prob * from_polling
    out_of_visit = (ec2mi / (2.0 * ecmi)
                    + (1.0 - p) / p * ecmi + emin / p)
    return (ev / ec) * in_visit + (ecmi / ec) * out_of_visit


def sojourn_lst(system: SystemSpec, queue: int, s: float,
                quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Laplace-Stieltjes transform of the sojourn time at one queue.

    Follows the same arrival-phase decomposition as `sojourn_mean`, with the
    waiting pool's geometric retry structure transformed through the factor
    p x / (1 - (1-p) x). The per-attempt transform treats the completion
    indicator and the attempt length as independent, which is exact for
    exponential service and in general matches the true transform in value
    and slope at s = 0.
    """
    if s < 0.0:
        raise DomainError("transform argument s must be >= 0")
    if s == 0.0:
        return 1.0
    c = _sojourn_context(system, queue, quad)
    ev, ec = c.visit_mean, c.cycle_mean
    ecmi = c.partial_mean
    p = c.completion_prob

    # transform of the server-elsewhere remainder of a cycle
    away = 1.0
    for q in c.others:
        away *= q.visit.lst(s)
    for q in system.queues:
        away *= q.switch.lst(s)
    attempt = min_lst(c.service, c.visit, s, quad)

    def geometric(x: float) -> float:
        return p * x / (1.0 - (1.0 - p) * x)

    visit_atoms = [a for a, _ in c.visit.atoms] if c.visit.atoms else ()
    served_in_visit = expectation(
        c.service,
        lambda b: math.exp(-s * b) * (1.0 - float(c.visit.integrated_survival(b)) / ev),
        breakpoints=visit_atoms, quad=quad)
    residual_excess = survival_product_integral(c.visit, c.service, s, 0, quad) / ev
    residual_away = (1.0 - away) / (s * ecmi)

    term_served = (ev / ec) * served_in_visit
    term_overflow = (ev / ec) * residual_excess * geometric(away * attempt)
    term_outside = (ecmi / ec) * residual_away \
        * (p / (1.0 - (1.0 - p) * away)) * geometric(attempt)
    return term_served + term_overflow + term_outside


def _exponential_rates(system: SystemSpec, queue: int) -> tuple[float, float]:
    from .distributions import Exponential

    spec = _queue_checked(system, queue)
    if not isinstance(spec.service, Exponential) or not isinstance(spec.visit, Exponential):
        raise UnsupportedModelError(
            f"queue {queue}: closed form needs exponential service and visit laws")
    return spec.visit.rate, spec.service.rate


def sojourn_mean_exponential(system: SystemSpec, queue: int) -> float:
    """Closed-form sojourn mean for a queue with exponential service and visit.

    Bypasses all quadrature; used to cross-check the general path.
    """
    gamma, mu = _exponential_rates(system, queue)
    moments = cycle_moments(system)
    ec = moments.cycle_mean
    ecmi = moments.partial_means[queue]
    ec2mi = moments.partial_second_moments[queue]
    return (gamma * ecmi + 1.0) ** 2 / (gamma * mu * ec) + ec2mi / (2.0 * ec)


def sojourn_lst_exponential(system: SystemSpec, queue: int, s: float) -> float:
    """Closed-form sojourn transform for exponential service and visit laws."""
    if s < 0.0:
        raise DomainError("transform argument s must be >= 0")
    if s == 0.0:
        return 1.0
    gamma, mu = _exponential_rates(system, queue)
    moments = cycle_moments(system)
    ec = moments.cycle_mean
    ecmi = moments.partial_means[queue]
    away = 1.0
    for j, q in enumerate(system.queues):
        if j != queue:
            away *= q.visit.lst(s)
        away *= q.switch.lst(s)
    first = (1.0 / (gamma + mu + s)) * (mu / gamma) / ec
    second = (1.0 / (gamma + mu + s)) * (mu * away / (gamma + mu + s - gamma * away)) / ec
    third = ((1.0 - away) / (s * ec)) * (mu / (gamma + mu - gamma * away)) \
        * (mu / (mu + s))
    return first + second + third


def sojourn_metrics(system: SystemSpec, s_grid=(),
                    quad: QuadratureConfig = DEFAULT_QUADRATURE) -> SojournMetrics:
    """Sojourn means for every queue plus a transform table over `s_grid`."""
    s_values = tuple(float(s) for s in s_grid)
    if any(s < 0.0 for s in s_values):
        raise DomainError("transform grid values must be >= 0")
    n = len(system.queues)
    means = tuple(sojourn_mean(system, i, quad) for i in range(n))
    table = np.empty((n, len(s_values)))
    for i in range(n):
        for k, s in enumerate(s_values):
            table[i, k] = sojourn_lst(system, i, s, quad)
    return SojournMetrics(means=means, s_grid=s_values, lst_table=table)


def weighted_sojourn_mean(system: SystemSpec,
                          quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Sojourn mean of a uniformly random arriving customer.

    Averages the per-queue means with arrival-rate weights.
    """
    rates = [q.arrival_rate for q in system.queues]
    total = sum(rates)
    if total <= 0.0:
        raise ModelError("weighted sojourn mean needs a positive total arrival rate")
    acc = 0.0
    for i, rate in enumerate(rates):
        if rate > 0.0:
            acc += rate * sojourn_mean(system, i, quad)
    return acc / total
