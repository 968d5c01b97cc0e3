"""Single-tour throughput evaluation and visit-order optimization.

Starting from a known backlog, the expected number of services completed in
one tour splits into an order-invariant constant plus a sum of pairwise
delay penalties: every queue visited later accumulates extra arrivals over
the travel and visit times of the queues before it, and a fraction of those
extra arrivals completes. An adjacent-swap argument shows the penalty sum
is minimized by sorting queues on a one-number index, so the best order
never depends on the backlog itself. Both tour styles are covered: the
serial style visits every queue and pays its switch-over, the central-point
style leaves from and returns to a hub and visits only non-empty queues.

`brute_force_order` evaluates every permutation and exists to keep the
index rule honest in tests; `optimal_order` is the production path.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .analytic import SystemSpec, derived_quantities
from .distributions import QuadratureConfig, DEFAULT_QUADRATURE
from .errors import DomainError, UnsupportedModelError

__all__ = [
    "SERIAL",
    "CENTRAL_POINT",
    "TourState",
    "ThroughputReport",
    "BruteForceResult",
    "expected_throughput",
    "optimal_order",
    "brute_force_order",
]

SERIAL = "serial"
CENTRAL_POINT = "central_point"

_BRUTE_FORCE_LIMIT = 9


@dataclass(frozen=True)
class TourState:
    """Backlog vector and tour style for a single-tour evaluation.

    counts holds the number of customers initially present at each queue.
    In central_point mode the tour visits exactly the non-empty queues.
    """

    counts: tuple[int, ...]
    mode: str = SERIAL

    def __post_init__(self):
        for c in self.counts:
            if float(c) != int(c):
                raise DomainError("initial counts must be integers")
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise DomainError("initial counts must be nonnegative")
        object.__setattr__(self, "counts", counts)
        if self.mode not in (SERIAL, CENTRAL_POINT):
            raise DomainError(f"mode must be {SERIAL!r} or {CENTRAL_POINT!r}")

    @property
    def visited(self) -> tuple[int, ...]:
        """Queues a tour must cover: all in serial mode, non-empty otherwise."""
        if self.mode == SERIAL:
            return tuple(range(len(self.counts)))
        return tuple(i for i, c in enumerate(self.counts) if c > 0)


@dataclass(frozen=True)
class ThroughputReport:
    """Expected services in one tour, decomposed for audit.

    total = constant + sum over visited queues of
    arrival_rate * completion_prob * (time elapsed before the visit that is
    not already inside the constant). index_values holds each queue's
    ordering index; sorting visited queues ascending by it maximizes total.
    """

    order: tuple[int, ...]
    total: float
    per_queue: np.ndarray
    index_values: np.ndarray
    constant: float


@dataclass(frozen=True)
class BruteForceResult:
    """Exhaustive scan outcome: best report plus the full ranked permutation list."""

    best: ThroughputReport
    ranking: tuple[tuple[tuple[int, ...], float], ...]


class _TourParams:
    """Per-queue numbers shared by every order of one (system, state) pair."""

    __slots__ = ("n", "mode", "counts", "rate_prob", "delay", "base",
                 "index", "visited")

    def __init__(self, system: SystemSpec, state: TourState,
                 quad: QuadratureConfig):
        queues = system.queues
        self.n = len(queues)
        if len(state.counts) != self.n:
            raise DomainError(
                f"state has {len(state.counts)} counts for {self.n} queues")
        if state.mode == CENTRAL_POINT and not system.has_central_point:
            raise UnsupportedModelError(
                "central_point mode needs approach and return laws on every queue")
        self.mode = state.mode
        self.counts = state.counts
        self.visited = state.visited

        lam = np.array([q.arrival_rate for q in queues])
        p = np.empty(self.n)
        leftover = np.empty(self.n)
        for i in range(self.n):
            d = derived_quantities(system, i, quad)
            p[i] = d.completion_prob
            leftover[i] = d.leftover_arrival_mean
        ev = np.array([q.visit.mean() for q in queues])
        served_within = lam * ev - leftover

        self.rate_prob = lam * p
        if state.mode == SERIAL:
            ed = np.array([q.switch.mean() for q in queues])
            self.delay = ev + ed
            self.base = np.asarray(state.counts) * p + served_within
        else:
            ee = np.array([q.approach.mean() for q in queues])
            er = np.array([q.return_.mean() for q in queues])
            self.delay = ee + ev + er
            self.base = (np.asarray(state.counts) + lam * ee) * p + served_within
        # visit laws have no mass at zero, so every delay is positive
        self.index = self.rate_prob / self.delay

    def check_order(self, order) -> tuple[int, ...]:
        order = tuple(int(q) for q in order)
        if sorted(order) != sorted(self.visited):
            need = "all queues" if self.mode == SERIAL else "the non-empty queues"
            raise DomainError(f"order {order} must be a permutation of {need} "
                              f"{self.visited}")
        return order

    def constant(self) -> float:
        return float(sum(self.base[q] for q in self.visited))

    def order_penalty(self, order) -> float:
        total = 0.0
        elapsed = 0.0
        for q in order:
            total += self.rate_prob[q] * elapsed
            elapsed += self.delay[q]
        return total

    def report(self, order) -> ThroughputReport:
        per_queue = np.zeros(self.n)
        elapsed = 0.0
        for q in order:
            per_queue[q] = self.base[q] + self.rate_prob[q] * elapsed
            elapsed += self.delay[q]
        return ThroughputReport(order=order, total=float(per_queue.sum()),
                                per_queue=per_queue,
                                index_values=self.index.copy(),
                                constant=self.constant())


def expected_throughput(system: SystemSpec, state: TourState, order,
                        quad: QuadratureConfig = DEFAULT_QUADRATURE,
                        ) -> ThroughputReport:
    """Expected number of services completed in one tour following `order`.

    The order must be a permutation of the visited set implied by the state
    (every queue in serial mode, the non-empty queues in central_point
    mode). A customer present when its queue is polled completes with that
    queue's completion probability; arrivals during the visit complete
    unless they run past the visit end; arrivals before the visit behave
    like initial customers.
    """
    params = _TourParams(system, state, quad)
    return params.report(params.check_order(order))


def optimal_order(system: SystemSpec, state: TourState, objective: str = "max",
                  quad: QuadratureConfig = DEFAULT_QUADRATURE,
                  ) -> ThroughputReport:
    """Best visiting order by the index rule, without scanning permutations.

    objective "max" sorts visited queues by ascending index
    (arrival_rate * completion_prob / expected time the visit occupies);
    "min" reverses the sort. Ties keep ascending queue order, so the result
    is deterministic. The chosen order does not depend on the backlog,
    which only shifts the order-invariant constant.
    """
    if objective not in ("max", "min"):
        raise DomainError("objective must be 'max' or 'min'")
    params = _TourParams(system, state, quad)
    sign = 1.0 if objective == "max" else -1.0
    order = tuple(sorted(params.visited,
                         key=lambda q: (sign * params.index[q], q)))
    return params.report(order)


def brute_force_order(system: SystemSpec, state: TourState,
                      objective: str = "max",
                      quad: QuadratureConfig = DEFAULT_QUADRATURE,
                      ) -> BruteForceResult:
    """Exhaustive permutation scan; the test oracle for `optimal_order`.

    Refuses more than 9 visited queues (the scan is factorial); use
    `optimal_order`, which needs no scan, beyond that.
    """
    if objective not in ("max", "min"):
        raise DomainError("objective must be 'max' or 'min'")
    params = _TourParams(system, state, quad)
    visited = params.visited
    if len(visited) > _BRUTE_FORCE_LIMIT:
        raise DomainError(
            f"brute force over {len(visited)} queues needs "
            f"{len(visited)}! evaluations; use optimal_order instead")
    constant = params.constant()
    scored = [(order, constant + params.order_penalty(order))
              for order in permutations(visited)]
    if objective == "max":
        best_first = sorted(scored, key=lambda item: (-item[1], item[0]))
    else:
        best_first = sorted(scored, key=lambda item: (item[1], item[0]))
    return BruteForceResult(best=params.report(best_first[0][0]),
                            ranking=tuple(best_first))
