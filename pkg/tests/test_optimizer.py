"""Optimizer checks: frozen hand-computed tour values, the index rule versus
exhaustive search, interchange structure, and the simulation cross-check.

Hand oracles use memoryless service and visit laws with equal rates, where
the completion probability is exactly 1/2 and the expected leftover arrival
count is half the arrival volume of a visit.
"""
from itertools import permutations

import numpy as np
import pytest

from mginfpolling.analytic import QueueSpec, SystemSpec
from mginfpolling.distributions import Deterministic, Erlang, Exponential
from mginfpolling.errors import DomainError, UnsupportedModelError
from mginfpolling.optimizer import (
    CENTRAL_POINT,
    SERIAL,
    TourState,
    brute_force_order,
    expected_throughput,
    optimal_order,
)
from mginfpolling.simulator import single_cycle_throughput


def serial_system(lams, switch=0.25):
    return SystemSpec(tuple(
        QueueSpec(lam, Exponential(1.0), Exponential(1.0), Deterministic(switch))
        for lam in lams))


def central_system(rows):
    return SystemSpec(tuple(
        QueueSpec(lam, Exponential(1.0), Exponential(1.0), Deterministic(0.0),
                  approach=Deterministic(e), return_=Deterministic(r))
        for lam, e, r in rows))


class TestTourState:
    def test_rejects_bad_counts_and_mode(self):
        with pytest.raises(DomainError):
            TourState((1, -1))
        with pytest.raises(DomainError):
            TourState((1.5, 2))
        with pytest.raises(DomainError):
            TourState((1, 2), mode="roundtrip")

    def test_integral_floats_become_ints(self):
        st = TourState((2.0, 0.0))
        assert st.counts == (2, 0)

    def test_visited_sets(self):
        assert TourState((0, 3, 0)).visited == (0, 1, 2)
        assert TourState((0, 3, 0), mode=CENTRAL_POINT).visited == (1,)
        assert TourState((0, 0), mode=CENTRAL_POINT).visited == ()


class TestExpectedThroughput:
    def test_zero_rates_leave_only_initial_customers(self):
        sys = SystemSpec((
            QueueSpec(0.0, Exponential(1.0), Exponential(1.0), Deterministic(0.25)),
            QueueSpec(0.0, Exponential(2.0), Exponential(2.0), Deterministic(0.25)),
        ))
        st = TourState((4, 6))
        for order in ((0, 1), (1, 0)):
            rep = expected_throughput(sys, st, order)
            assert abs(rep.total - (4 * 0.5 + 6 * 0.5)) < 1e-12

    def test_identical_queues_are_order_blind(self):
        sys = serial_system([0.7, 0.7])
        st = TourState((3, 3))
        a = expected_throughput(sys, st, (0, 1))
        b = expected_throughput(sys, st, (1, 0))
        assert abs(a.total - b.total) < 1e-12

    def test_frozen_serial_values(self):
        # p=1/2, E[leftover arrivals]=lam/2, visit+switch delay 1.25 each:
        # constant = 0.5*(2+3+1) + 0.5*(1.25+0.5+0.875) = 4.3125
        # penalty of (1,2,0) = 1.25*(0.4375 + 2*0.625) = 2.109375
        sys = serial_system([1.25, 0.5, 0.875])
        st = TourState((2, 3, 1))
        rep = expected_throughput(sys, st, (1, 2, 0))
        assert abs(rep.constant - 4.3125) < 5e-12
        assert abs(rep.total - 6.421875) < 5e-12
        rep2 = expected_throughput(sys, st, (0, 1, 2))
        assert abs(rep2.total - 5.71875) < 5e-12

    def test_frozen_central_values(self):
        sys = central_system([(1.25, 0.2, 0.3), (0.5, 0.1, 0.4), (0.875, 0.3, 0.2)])
        st = TourState((2, 0, 1), mode=CENTRAL_POINT)
        rep = expected_throughput(sys, st, (2, 0))
        # c' = 1.75 + 1.06875; penalty of visiting 0 after 2 = 0.625*1.5
        assert abs(rep.constant - 2.81875) < 5e-12
        assert abs(rep.total - 3.75625) < 5e-12
        assert rep.per_queue[1] == 0.0

    def test_per_queue_decomposition(self):
        sys = serial_system([1.25, 0.5, 0.875])
        st = TourState((2, 3, 1))
        for order in permutations(range(3)):
            rep = expected_throughput(sys, st, order)
            assert abs(rep.per_queue.sum() - rep.total) < 1e-12
            assert np.all(rep.per_queue >= 0.0)
            assert abs(rep.constant - 4.3125) < 1e-12

    def test_order_validation(self):
        sys = serial_system([0.5, 0.6, 0.7])
        st = TourState((1, 1, 1))
        for bad in ((0, 1), (0, 1, 1), (0, 1, 3)):
            with pytest.raises(DomainError):
                expected_throughput(sys, st, bad)
        cst = TourState((1, 0, 1), mode=CENTRAL_POINT)
        csys = central_system([(0.5, 0.1, 0.1), (0.6, 0.1, 0.1), (0.7, 0.1, 0.1)])
        with pytest.raises(DomainError):
            expected_throughput(csys, cst, (0, 1, 2))
        with pytest.raises(UnsupportedModelError):
            expected_throughput(sys, cst, (0, 2))
        with pytest.raises(DomainError):
            expected_throughput(sys, TourState((1, 1)), (0, 1))

    def test_matches_single_cycle_simulation(self):
        sys = serial_system([1.25, 0.5, 0.875])
        st = TourState((2, 3, 1))
        for k, order in enumerate(permutations(range(3))):
            rep = expected_throughput(sys, st, order)
            est = single_cycle_throughput(sys, order, st.counts,
                                          replications=40_000,
                                          master_seed=100 + k)
            z = (est.mean - rep.total) / est.stderr
            assert abs(z) < 4.0, (order, z)


class TestOptimalOrder:
    def test_index_rule_example(self):
        sys = serial_system([1.25, 0.5, 0.875])
        rep = optimal_order(sys, TourState((2, 3, 1)), "max")
        assert np.allclose(rep.index_values, [0.5, 0.2, 0.35])
        assert rep.order == (1, 2, 0)
        assert optimal_order(sys, TourState((2, 3, 1)), "min").order == (0, 2, 1)

    def test_identical_queues_keep_identity_order(self):
        sys = serial_system([0.9, 0.9, 0.9, 0.9])
        st = TourState((1, 2, 3, 4))
        assert optimal_order(sys, st, "max").order == (0, 1, 2, 3)
        assert optimal_order(sys, st, "min").order == (0, 1, 2, 3)

    def test_backlog_never_changes_the_order(self):
        sys = serial_system([1.1, 0.3, 0.6, 0.9])
        rng = np.random.default_rng(5)
        reference = optimal_order(sys, TourState((0, 0, 0, 0)), "max").order
        for _ in range(8):
            counts = tuple(int(c) for c in rng.integers(0, 20, size=4))
            assert optimal_order(sys, TourState(counts), "max").order == reference

    def test_objective_validation(self):
        sys = serial_system([0.5, 0.6])
        with pytest.raises(DomainError):
            optimal_order(sys, TourState((1, 1)), "most")
        with pytest.raises(DomainError):
            brute_force_order(sys, TourState((1, 1)), "least")


class TestBruteForce:
    def test_guard_refuses_large_scans(self):
        sys = serial_system([0.1 * (i + 1) for i in range(10)])
        st = TourState((1,) * 10)
        with pytest.raises(DomainError, match="optimal_order"):
            brute_force_order(sys, st, "max")

    def test_ranking_is_complete_and_sorted(self):
        sys = serial_system([1.25, 0.5, 0.875])
        st = TourState((2, 3, 1))
        res = brute_force_order(sys, st, "max")
        assert len(res.ranking) == 6
        values = [v for _, v in res.ranking]
        assert values == sorted(values, reverse=True)
        res_min = brute_force_order(sys, st, "min")
        values = [v for _, v in res_min.ranking]
        assert values == sorted(values)
        assert res.best.order == (1, 2, 0)
        assert res_min.best.order == (0, 2, 1)

    def test_two_queue_gap_is_the_interchange_difference(self):
        # |theta(0,1) - theta(1,0)| = |lam2 p2 (EV1+ED1) - lam1 p1 (EV2+ED2)|
        sys = serial_system([1.3, 0.4], switch=0.5)
        st = TourState((2, 5))
        res = brute_force_order(sys, st, "max")
        gap = res.ranking[0][1] - res.ranking[1][1]
        expected = abs(0.4 * 0.5 * 1.5 - 1.3 * 0.5 * 1.5)
        assert abs(abs(gap) - expected) < 1e-12

    def test_interchange_sign_structure(self):
        # swapping adjacent (x, y) changes the total by w_x w_y (I_x - I_y)
        sys = serial_system([1.25, 0.5, 0.875, 0.3], switch=0.4)
        st = TourState((1, 0, 2, 3))
        rep = expected_throughput(sys, st, (0, 1, 2, 3))
        w = 1.4
        for k in range(3):
            order = [0, 1, 2, 3]
            order[k], order[k + 1] = order[k + 1], order[k]
            swapped = expected_throughput(sys, st, tuple(order))
            x, y = k, k + 1
            predicted = w * w * (rep.index_values[x] - rep.index_values[y])
            assert abs((swapped.total - rep.total) - predicted) < 1e-12

    def test_randomized_agreement_with_index_rule(self):
        rng = np.random.default_rng(2026)
        for trial in range(60):
            n = int(rng.integers(3, 8))
            lams = rng.uniform(0.05, 1.5, size=n)
            switches = rng.uniform(0.0, 0.8, size=n)
            rates = rng.uniform(0.5, 2.0, size=n)
            queues = []
            for i in range(n):
                service = Erlang(2, 2 * rates[i]) if i % 3 == 0 \
                    else Exponential(rates[i])
                queues.append(QueueSpec(float(lams[i]), service,
                                        Exponential(rates[i]),
                                        Deterministic(float(switches[i]))))
            sys = SystemSpec(tuple(queues))
            counts = tuple(int(c) for c in rng.integers(0, 12, size=n))
            st = TourState(counts)
            for objective in ("max", "min"):
                rule = optimal_order(sys, st, objective)
                scan = brute_force_order(sys, st, objective)
                best_value = scan.ranking[0][1]
                optima = {order for order, value in scan.ranking
                          if abs(value - best_value) < 1e-9}
                assert rule.order in optima, (trial, objective)
                assert abs(rule.total - best_value) < 1e-9

    def test_empty_central_tour(self):
        sys = central_system([(0.5, 0.1, 0.2), (0.8, 0.2, 0.1)])
        st = TourState((0, 0), mode=CENTRAL_POINT)
        res = brute_force_order(sys, st, "max")
        assert res.best.order == ()
        assert res.best.total == 0.0
        assert res.ranking == (((), 0.0),)
