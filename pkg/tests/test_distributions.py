"""Distribution families: moments, transforms, sampling, fits.

Closed-form values asserted here were computed by hand or in independent
high-precision scratch sessions before the implementation existed, so the
suite cannot inherit a bug from the code under test.
"""
import math

import numpy as np
import pytest

from mginfpolling.distributions import (
    DEFAULT_QUADRATURE,
    Deterministic,
    Discrete,
    Erlang,
    Exponential,
    HyperExponential,
    MixedErlang,
    QuadratureConfig,
    completion_probability,
    expectation,
    expected_min,
    fit_hyperexponential,
    fit_mixed_erlang,
    fit_two_moments,
    has_atom_at_zero,
    min_lst,
    residual_lst,
    residual_survival,
    survival_product_integral,
)
from mginfpolling.errors import DomainError

ALL_LAWS = [
    Exponential(1.3),
    Deterministic(0.7),
    Erlang(3, 2.1),
    MixedErlang(0.3, 4, 2.0),
    HyperExponential(0.6, 2.0, 0.5),
    Discrete(((0.2, 0.25), (1.0, 0.5), (2.5, 0.25))),
]


class TestMoments:
    def test_exponential(self):
        d = Exponential(2.0)
        assert d.mean() == 0.5
        assert d.second_moment() == 0.5
        assert d.variance() == pytest.approx(0.25)
        assert d.scv() == pytest.approx(1.0)

    def test_deterministic(self):
        d = Deterministic(3.0)
        assert d.mean() == 3.0
        assert d.second_moment() == 9.0
        assert d.variance() == pytest.approx(0.0, abs=1e-12)

    def test_erlang(self):
        d = Erlang(4, 2.0)
        assert d.mean() == 2.0
        assert d.second_moment() == pytest.approx(5.0)
        assert d.scv() == pytest.approx(0.25)

    def test_mixed_erlang(self):
        # p=0.5 mix of Erlang(1,2) and Erlang(2,2): mean 0.75, E[Y^2] = 1
        d = MixedErlang(0.5, 2, 2.0)
        assert d.mean() == pytest.approx(0.75)
        assert d.second_moment() == pytest.approx(1.0)

    def test_hyperexponential(self):
        d = HyperExponential(0.25, 2.0, 0.5)
        assert d.mean() == pytest.approx(0.25 / 2.0 + 0.75 / 0.5)
        assert d.second_moment() == pytest.approx(2 * 0.25 / 4.0 + 2 * 0.75 / 0.25)
        assert d.scv() > 1.0

    def test_discrete(self):
        d = Discrete(((1.0, 0.5), (3.0, 0.5)))
        assert d.mean() == pytest.approx(2.0)
        assert d.second_moment() == pytest.approx(5.0)


class TestSurvivalAndTransforms:
    @pytest.mark.parametrize("d", ALL_LAWS, ids=lambda d: type(d).__name__)
    def test_survival_cdf_complement(self, d):
        xs = np.linspace(0.0, d.truncation_point(1e-10) + 1.0, 57)
        sv = np.asarray(d.survival(xs), dtype=float)
        assert np.all(sv >= -1e-15) and np.all(sv <= 1.0 + 1e-15)
        assert np.all(np.diff(sv) <= 1e-15)
        assert np.allclose(np.asarray(d.cdf(xs)) + sv, 1.0, atol=1e-12)

    @pytest.mark.parametrize("d", ALL_LAWS, ids=lambda d: type(d).__name__)
    def test_lst_basics(self, d):
        assert d.lst(0.0) == pytest.approx(1.0, abs=1e-14)
        vals = [d.lst(s) for s in (0.0, 0.5, 1.0, 2.0, 5.0)]
        assert all(b < a + 1e-15 for a, b in zip(vals, vals[1:]))
        # -d/ds lst at 0 equals the mean
        h = 1e-6
        deriv = (d.lst(h) - d.lst(0.0)) / h
        assert -deriv == pytest.approx(d.mean(), rel=1e-4)

    @pytest.mark.parametrize("d", ALL_LAWS, ids=lambda d: type(d).__name__)
    def test_integrated_survival_matches_numeric(self, d):
        hi = d.truncation_point(1e-12)
        xs = np.linspace(0.0, hi, 4001)
        isv = np.asarray(d.integrated_survival(xs), dtype=float)
        # midpoint sums are exact for piecewise-constant survival
        mids = np.asarray(d.survival((xs[:-1] + xs[1:]) / 2), dtype=float)
        num = np.concatenate([[0.0], np.cumsum(mids * np.diff(xs))])
        assert np.max(np.abs(isv - num)) < 5e-5
        assert d.integrated_survival(hi * 4) == pytest.approx(d.mean(), rel=1e-9)

    def test_deterministic_strict_survival(self):
        d = Deterministic(2.0)
        assert d.survival(1.999) == 1.0
        assert d.survival(2.0) == 0.0
        assert d.cdf(2.0) == 1.0

    def test_discrete_step_boundaries(self):
        d = Discrete(((1.0, 0.25), (2.0, 0.75)))
        assert d.survival(0.0) == pytest.approx(1.0)
        assert d.survival(1.0) == pytest.approx(0.75)
        assert d.survival(2.0) == pytest.approx(0.0, abs=1e-15)
        assert d.integrated_survival(1.5) == pytest.approx(1.0 + 0.5 * 0.75)

    def test_erlang_survival_closed_form(self):
        # Erlang(2, mu): S(x) = e^{-mu x}(1 + mu x)
        d = Erlang(2, 1.5)
        for x in (0.1, 0.9, 2.7):
            want = math.exp(-1.5 * x) * (1 + 1.5 * x)
            assert float(d.survival(x)) == pytest.approx(want, rel=1e-12)

    def test_residual_transform_of_point_mass(self):
        # residual of det(2) is uniform(0,2): (1 - e^{-2s}) / (2s)
        got = residual_lst(Deterministic(2.0), 1.0)
        assert got == pytest.approx(0.43233235838169365, rel=1e-13)
        assert residual_lst(Deterministic(2.0), 0.0) == 1.0

    def test_residual_of_exponential_is_itself(self):
        d = Exponential(1.7)
        xs = np.linspace(0.0, 5.0, 11)
        assert np.allclose(residual_survival(d, xs), d.survival(xs), atol=1e-12)
        for s in (0.3, 1.0, 4.0):
            assert residual_lst(d, s) == pytest.approx(d.lst(s), rel=1e-12)

    @pytest.mark.parametrize("d", ALL_LAWS, ids=lambda d: type(d).__name__)
    def test_truncation_point_bounds_tail(self, d):
        t = d.truncation_point(1e-9)
        assert float(d.survival(t * (1 + 1e-9) + 1e-12)) <= 1e-9 * (1 + 1e-6)


class TestPdf:
    def test_pdf_integrates_to_one(self):
        for d in (Exponential(1.3), Erlang(3, 2.1), MixedErlang(0.3, 4, 2.0),
                  HyperExponential(0.6, 2.0, 0.5)):
            xs = np.linspace(0.0, d.truncation_point(1e-13), 20001)
            mass = np.trapezoid(np.asarray(d.pdf(xs)), xs)
            assert mass == pytest.approx(1.0, abs=1e-5)

    def test_atomic_laws_have_no_density(self):
        with pytest.raises(DomainError):
            Deterministic(1.0).pdf(0.5)
        with pytest.raises(DomainError):
            Discrete(((1.0, 1.0),)).pdf(0.5)


class TestValidation:
    def test_bad_rates(self):
        for bad in (0.0, -1.0, math.inf, math.nan):
            with pytest.raises(DomainError):
                Exponential(bad)
        with pytest.raises(DomainError):
            Erlang(0, 1.0)
        with pytest.raises(DomainError):
            Erlang(2.5, 1.0)

    def test_bad_mixtures(self):
        with pytest.raises(DomainError):
            MixedErlang(1.5, 3, 1.0)
        with pytest.raises(DomainError):
            MixedErlang(0.5, 1, 1.0)
        with pytest.raises(DomainError):
            HyperExponential(-0.1, 1.0, 2.0)

    def test_bad_discrete(self):
        with pytest.raises(DomainError):
            Discrete(())
        with pytest.raises(DomainError):
            Discrete(((1.0, 0.5), (2.0, 0.6)))
        with pytest.raises(DomainError):
            Discrete(((1.0, 0.5), (1.0, 0.5)))
        with pytest.raises(DomainError):
            Discrete(((-1.0, 1.0),))

    def test_discrete_renormalizes_tiny_drift(self):
        w = 1.0 / 3.0
        d = Discrete(((1.0, w), (2.0, w), (3.0, w)))
        assert sum(p for _, p in d.atoms) == pytest.approx(1.0, abs=1e-15)

    def test_atom_at_zero_helper(self):
        assert has_atom_at_zero(Deterministic(0.0))
        assert has_atom_at_zero(Discrete(((0.0, 0.5), (1.0, 0.5))))
        assert not has_atom_at_zero(Deterministic(1.0))
        assert not has_atom_at_zero(Exponential(1.0))


class TestSampling:
    @pytest.mark.parametrize("d", ALL_LAWS, ids=lambda d: type(d).__name__)
    def test_seeded_moments(self, d):
        rng = np.random.default_rng(1234)
        x = np.asarray(d.sample(rng, 200_000), dtype=float)
        se = np.std(x) / math.sqrt(len(x)) + 1e-12
        assert abs(np.mean(x) - d.mean()) < 5 * se
        assert np.var(x) == pytest.approx(d.variance(), rel=0.05, abs=1e-9)

    @pytest.mark.parametrize("d", ALL_LAWS, ids=lambda d: type(d).__name__)
    def test_reproducible(self, d):
        a = np.asarray(d.sample(np.random.default_rng(9), 64), dtype=float)
        b = np.asarray(d.sample(np.random.default_rng(9), 64), dtype=float)
        assert np.array_equal(a, b)

    def test_scalar_draws(self):
        for d in ALL_LAWS:
            v = d.sample(np.random.default_rng(3))
            assert np.ndim(v) == 0 and float(v) >= 0.0


class TestTwoLawFunctionals:
    def test_expected_min_erlang_exponential(self):
        # E[min] = int e^{-x}(1+2x)e^{-2x} dx = 1/3 + 2/9 = 5/9
        got = expected_min(Erlang(2, 2.0), Exponential(1.0))
        assert got == pytest.approx(5.0 / 9.0, rel=1e-11)

    def test_expected_min_against_sampling(self):
        a, b = MixedErlang(0.3, 4, 2.0), HyperExponential(0.6, 2.0, 0.5)
        rng = np.random.default_rng(5)
        x = np.minimum(a.sample(rng, 400_000), b.sample(rng, 400_000))
        se = np.std(x) / math.sqrt(len(x))
        assert abs(expected_min(a, b) - np.mean(x)) < 5 * se

    def test_min_lst_point_mass_vs_exponential(self):
        # min(det(1), exp(1)): E[e^{-s min}] at s=1 is (1-e^{-2})/2 + e^{-2}
        got = min_lst(Deterministic(1.0), Exponential(1.0), 1.0)
        assert got == pytest.approx(0.5676676416183064, rel=1e-12)
        assert min_lst(Deterministic(1.0), Exponential(1.0), 0.0) == 1.0

    def test_exponential_pair_fast_path_consistent(self):
        # Erlang with one phase is the same law but routes through quadrature
        a, b = Exponential(1.5), Exponential(0.7)
        ag, bg = Erlang(1, 1.5), Erlang(1, 0.7)
        for s in (0.0, 0.8):
            for m in (0, 1, 2):
                fast = survival_product_integral(a, b, s, m)
                slow = survival_product_integral(ag, bg, s, m)
                assert fast == pytest.approx(slow, rel=1e-10)

    def test_moment_weighted_integral(self):
        # int x e^{-x} e^{-2x} dx = 1/9
        got = survival_product_integral(Exponential(1.0), Exponential(2.0), 0.0, 1)
        assert got == pytest.approx(1.0 / 9.0, rel=1e-12)

    def test_expectation_sums_atoms_exactly(self):
        d = Discrete(((0.5, 0.25), (1.5, 0.5), (4.0, 0.25)))
        got = expectation(d, lambda x: x**2)
        assert got == d.second_moment()

    def test_expectation_continuous(self):
        d = Exponential(2.0)
        assert expectation(d, lambda x: x) == pytest.approx(0.5, rel=1e-10)
        assert expectation(d, math.cos) == pytest.approx(4.0 / 5.0, rel=1e-10)

    def test_negative_s_rejected(self):
        with pytest.raises(DomainError):
            residual_lst(Exponential(1.0), -0.5)
        with pytest.raises(DomainError):
            min_lst(Exponential(1.0), Exponential(1.0), -1.0)


class TestCompletionProbability:
    def test_exponential_pair(self):
        # P[B <= V] for B ~ exp(mu), V ~ exp(gamma) is mu / (mu + gamma)
        got = completion_probability(Exponential(3.0), Exponential(1.0))
        assert got == pytest.approx(0.75, rel=1e-10)

    def test_tie_counts_as_completed(self):
        assert completion_probability(Deterministic(1.0), Deterministic(1.0)) == 1.0
        got = completion_probability(
            Discrete(((1.0, 0.5), (3.0, 0.5))), Discrete(((1.0, 0.5), (2.0, 0.5))))
        # B=1 always fits; B=3 never does
        assert got == pytest.approx(0.5)

    def test_certain_completion(self):
        assert completion_probability(
            Deterministic(1.0), Deterministic(2.0)) == 1.0

    def test_against_sampling(self):
        b, v = Erlang(2, 3.0), MixedErlang(0.4, 3, 2.0)
        rng = np.random.default_rng(11)
        hits = np.mean(b.sample(rng, 400_000) <= v.sample(rng, 400_000))
        assert completion_probability(b, v) == pytest.approx(hits, abs=4e-3)


class TestFits:
    def test_mixed_erlang_frozen_values(self):
        d = fit_mixed_erlang(1.0, 0.5)
        assert isinstance(d, MixedErlang)
        assert d.p == pytest.approx(0.0, abs=1e-12)
        assert d.phases == 2
        assert d.rate == pytest.approx(2.0)

    def test_hyperexponential_frozen_values(self):
        d = fit_hyperexponential(1.0, 3.0)
        assert d.p == pytest.approx(0.8535533905932737, rel=1e-14)
        assert d.rate1 == pytest.approx(1.7071067811865475, rel=1e-14)
        assert d.rate2 == pytest.approx(0.29289321881345254, rel=1e-14)

    def test_stage_count_at_reciprocal_integers(self):
        # 1/scv landing on an integer up to float noise must not bump n
        d = fit_mixed_erlang(1.0, 1.0 / 3.0)
        assert d.phases == 3
        assert d.scv() == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_boundary_routes_to_exponential(self):
        d = fit_two_moments(2.0, 1.0)
        assert isinstance(d, Exponential)
        assert d.rate == pytest.approx(0.5)
        assert isinstance(fit_mixed_erlang(2.0, 1.0), Exponential)

    def test_moment_closure(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            m = float(rng.uniform(0.05, 8.0))
            c = float(rng.uniform(0.01, 6.0))
            d = fit_two_moments(m, c)
            assert d.mean() == pytest.approx(m, rel=1e-12)
            assert d.scv() == pytest.approx(c, rel=1e-9)

    def test_family_continuity_at_boundary(self):
        # both branches converge to exp(1/mean) as scv -> 1
        lo = fit_two_moments(1.0, 1.0 - 1e-9)
        hi = fit_two_moments(1.0, 1.0 + 1e-9)
        for s in (0.5, 1.0, 3.0):
            assert lo.lst(s) == pytest.approx(hi.lst(s), abs=1e-6)

    def test_out_of_range_rejected(self):
        with pytest.raises(DomainError):
            fit_mixed_erlang(1.0, 1.2)
        with pytest.raises(DomainError):
            fit_hyperexponential(1.0, 0.8)
        with pytest.raises(DomainError):
            fit_two_moments(-1.0, 0.5)


class TestQuadratureConfig:
    def test_defaults_are_tight(self):
        q = DEFAULT_QUADRATURE
        assert q.rel_tol <= 1e-8 and q.abs_tol <= 1e-10

    def test_custom_config_respected(self):
        loose = QuadratureConfig(rel_tol=1e-6, abs_tol=1e-8)
        got = expected_min(Erlang(2, 2.0), Exponential(1.0), quad=loose)
        assert got == pytest.approx(5.0 / 9.0, rel=1e-5)
