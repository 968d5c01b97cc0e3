"""Nonnegative time distributions with closed-form transforms.

Six families cover every law the analytic pipeline needs: exponential,
deterministic, Erlang, mixed Erlang, two-phase hyperexponential, and finite
discrete. Each exposes closed-form moments, the survival function, the
Laplace-Stieltjes transform on real s >= 0, the integrated survival function
(the workhorse behind residual laws), and reproducible sampling from a numpy
Generator.

Two-law functionals live here as free functions: the expected minimum of two
independent laws, its transform, survival-product integrals, and generic
expectations E[f(Y)]. Integrals against atomic laws are computed as exact
finite sums over atoms; continuous laws go through adaptive quadrature on a
truncated range chosen from the survival tail.

The two-moment fitting recipes used by parameter sweeps are also here:
`fit_mixed_erlang` for squared coefficients of variation at or below one and
`fit_hyperexponential` above one, with `fit_two_moments` dispatching between
them.
"""
from __future__ import annotations

import abc
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammainc, gammaincc, gammainccinv, gammaln

from .errors import DomainError, NumericsError

__all__ = [
    "QuadratureConfig",
    "DEFAULT_QUADRATURE",
    "Distribution",
    "Exponential",
    "Deterministic",
    "Erlang",
    "MixedErlang",
    "HyperExponential",
    "Discrete",
    "has_atom_at_zero",
    "residual_lst",
    "residual_survival",
    "survival_product_integral",
    "expected_min",
    "min_lst",
    "expectation",
    "completion_probability",
    "fit_mixed_erlang",
    "fit_hyperexponential",
    "fit_two_moments",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Accuracy targets for the adaptive quadrature behind two-law integrals.

    Attributes
    ----------
    rel_tol, abs_tol : float
        Relative and absolute integration tolerances handed to the adaptive
        Gauss-Kronrod integrator.
    tail_eps : float
        Tail cutoff defining the truncation point of an integration range:
        the smallest x with survival(x) below ``tail_eps``. Finite for every
        supported family (all have exponentially bounded or compact tails).
    max_intervals : int
        Subdivision limit before the integrator gives up.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    tail_eps: float = 1e-13
    max_intervals: int = 200


DEFAULT_QUADRATURE = QuadratureConfig()


def _adaptive_quad(fn, lo: float, hi: float, quad: QuadratureConfig,
                   breakpoints=(), label: str = "integral") -> float:
    """Integrate fn over [lo, hi], subdividing at the given breakpoints.

    Raises
    ------
    NumericsError
        If the integrator warns about non-convergence or reports an error
        estimate above the configured tolerance.
    """
    if hi <= lo:
        return 0.0
    pts = sorted({float(p) for p in breakpoints if lo < p < hi})
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                fn, lo, hi, points=pts or None,
                epsabs=quad.abs_tol, epsrel=quad.rel_tol,
                limit=quad.max_intervals)
        except integrate.IntegrationWarning as exc:
            raise NumericsError(
                f"quadrature failed for {label} on [{lo:g}, {hi:g}]: {exc}"
            ) from exc
    tolerance = max(quad.abs_tol, quad.rel_tol * abs(value))
    if err > max(tolerance * 1e3, 1e-9):
        raise NumericsError(
            f"quadrature error {err:.2e} too large for {label} on "
            f"[{lo:g}, {hi:g}] (value {value:.6e})")
    return value


class Distribution(abc.ABC):
    """A nonnegative random time with closed-form transforms.

    Subclasses provide exact moments, the (strict) survival function
    P[Y > x], the Laplace-Stieltjes transform on real s >= 0, the integrated
    survival function, a truncation point for quadrature, and sampling.
    Atomic laws additionally expose their atoms; continuous laws expose a
    density.
    """

    #: ((value, probability), ...) for atomic laws, None for continuous ones.
    atoms: tuple[tuple[float, float], ...] | None = None

    @abc.abstractmethod
    def mean(self) -> float:
        """E[Y]."""

    @abc.abstractmethod
    def second_moment(self) -> float:
        """E[Y^2]."""

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    def scv(self) -> float:
        """Squared coefficient of variation Var[Y] / E[Y]^2."""
        m = self.mean()
        if m <= 0.0:
            raise DomainError("scv undefined for a zero-mean law")
        return self.variance() / m**2

    @abc.abstractmethod
    def survival(self, x):
        """P[Y > x], elementwise on arrays."""

    def cdf(self, x):
        """P[Y <= x], elementwise on arrays."""
        return 1.0 - self.survival(x)

    def pdf(self, x):
        """Density at x; only continuous families implement this."""
        raise DomainError(f"{type(self).__name__} has no density")

    @abc.abstractmethod
    def lst(self, s: float) -> float:
        """E[exp(-s Y)] for real s >= 0."""

    @abc.abstractmethod
    def integrated_survival(self, x):
        """Integral of the survival function from 0 to x, elementwise."""

    @abc.abstractmethod
    def truncation_point(self, eps: float) -> float:
        """A finite x beyond which survival(x) <= eps."""

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, size=None):
        """Draw variates; a scalar for size=None, else an array."""


def _check_rate(rate: float, name: str = "rate") -> float:
    rate = float(rate)
    if not (rate > 0.0) or not math.isfinite(rate):
        raise DomainError(f"{name} must be positive and finite, got {rate!r}")
    return rate


@dataclass(frozen=True)
class Exponential(Distribution):
    """Exponential law with the given rate."""

    rate: float

    def __post_init__(self):
        _check_rate(self.rate)

    def mean(self):
        return 1.0 / self.rate

    def second_moment(self):
        return 2.0 / self.rate**2

    def survival(self, x):
        return np.exp(-self.rate * np.asarray(x, dtype=float))

    def pdf(self, x):
        return self.rate * np.exp(-self.rate * np.asarray(x, dtype=float))

    def lst(self, s):
        return self.rate / (self.rate + s)

    def integrated_survival(self, x):
        return -np.expm1(-self.rate * np.asarray(x, dtype=float)) / self.rate

    def truncation_point(self, eps):
        return -math.log(eps) / self.rate

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size=size)


@dataclass(frozen=True)
class Deterministic(Distribution):
    """Point mass at a fixed nonnegative time."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if not (value >= 0.0) or not math.isfinite(value):
            raise DomainError(f"value must be finite and >= 0, got {value!r}")
        object.__setattr__(self, "atoms", ((value, 1.0),))

    def mean(self):
        return self.value

    def second_moment(self):
        return self.value**2

    def survival(self, x):
        return np.where(np.asarray(x, dtype=float) < self.value, 1.0, 0.0)[()]

    def lst(self, s):
        return math.exp(-s * self.value)

    def integrated_survival(self, x):
        return np.minimum(np.asarray(x, dtype=float), self.value)[()]

    def truncation_point(self, eps):
        return self.value

    def sample(self, rng, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)


@dataclass(frozen=True)
class Erlang(Distribution):
    """Sum of `phases` independent exponential stages with a common rate."""

    phases: int
    rate: float

    def __post_init__(self):
        if not isinstance(self.phases, (int, np.integer)) or self.phases < 1:
            raise DomainError(f"phases must be an integer >= 1, got {self.phases!r}")
        object.__setattr__(self, "phases", int(self.phases))
        _check_rate(self.rate)

    def mean(self):
        return self.phases / self.rate

    def second_moment(self):
        return self.phases * (self.phases + 1) / self.rate**2

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return gammaincc(self.phases, self.rate * np.maximum(x, 0.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            logpdf = (self.phases * math.log(self.rate)
                      + (self.phases - 1) * np.log(x)
                      - self.rate * x - gammaln(self.phases))
        out = np.where(x > 0.0, np.exp(logpdf), 0.0)
        if self.phases == 1:
            out = np.where(x == 0.0, self.rate, out)
        return out[()]

    def lst(self, s):
        return (self.rate / (self.rate + s)) ** self.phases

    def integrated_survival(self, x):
        x = np.asarray(x, dtype=float)
        js = np.arange(1, self.phases + 1, dtype=float).reshape(
            (self.phases,) + (1,) * x.ndim)
        total = gammainc(js, self.rate * np.maximum(x, 0.0))
        return (total.sum(axis=0) / self.rate)[()]

    def truncation_point(self, eps):
        return float(gammainccinv(self.phases, eps)) / self.rate

    def sample(self, rng, size=None):
        return rng.gamma(self.phases, 1.0 / self.rate, size=size)


@dataclass(frozen=True)
class MixedErlang(Distribution):
    """Mixture of Erlang(phases - 1) and Erlang(phases) with a common rate.

    With probability `p` the law is the shorter Erlang with ``phases - 1``
    stages, otherwise the longer one with ``phases`` stages. This is the
    canonical two-moment family for squared coefficients of variation in
    (1/phases, 1/(phases - 1)].
    """

    p: float
    phases: int
    rate: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise DomainError(f"mixture weight must be in [0, 1], got {self.p!r}")
        if not isinstance(self.phases, (int, np.integer)) or self.phases < 2:
            raise DomainError(f"phases must be an integer >= 2, got {self.phases!r}")
        object.__setattr__(self, "phases", int(self.phases))
        _check_rate(self.rate)

    def _parts(self):
        return ((self.p, Erlang(self.phases - 1, self.rate)),
                (1.0 - self.p, Erlang(self.phases, self.rate)))

    def mean(self):
        return (self.phases - self.p) / self.rate

    def second_moment(self):
        n = self.phases
        return (self.p * (n - 1) * n + (1.0 - self.p) * n * (n + 1)) / self.rate**2

    def survival(self, x):
        return sum(w * part.survival(x) for w, part in self._parts())

    def pdf(self, x):
        return sum(w * part.pdf(x) for w, part in self._parts())

    def lst(self, s):
        return sum(w * part.lst(s) for w, part in self._parts())

    def integrated_survival(self, x):
        return sum(w * part.integrated_survival(x) for w, part in self._parts())

    def truncation_point(self, eps):
        return max(part.truncation_point(eps) for _, part in self._parts())

    def sample(self, rng, size=None):
        shorter = rng.random(size) < self.p
        if size is None:
            return rng.gamma(self.phases - int(shorter), 1.0 / self.rate)
        return rng.gamma(self.phases - shorter.astype(int), 1.0 / self.rate)


@dataclass(frozen=True)
class HyperExponential(Distribution):
    """Two-phase hyperexponential: rate1 with probability p, else rate2."""

    p: float
    rate1: float
    rate2: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise DomainError(f"mixture weight must be in [0, 1], got {self.p!r}")
        _check_rate(self.rate1, "rate1")
        _check_rate(self.rate2, "rate2")

    def mean(self):
        return self.p / self.rate1 + (1.0 - self.p) / self.rate2

    def second_moment(self):
        return 2.0 * self.p / self.rate1**2 + 2.0 * (1.0 - self.p) / self.rate2**2

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return (self.p * np.exp(-self.rate1 * x)
                + (1.0 - self.p) * np.exp(-self.rate2 * x))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return (self.p * self.rate1 * np.exp(-self.rate1 * x)
                + (1.0 - self.p) * self.rate2 * np.exp(-self.rate2 * x))

    def lst(self, s):
        return (self.p * self.rate1 / (self.rate1 + s)
                + (1.0 - self.p) * self.rate2 / (self.rate2 + s))

    def integrated_survival(self, x):
        x = np.asarray(x, dtype=float)
        return (-self.p * np.expm1(-self.rate1 * x) / self.rate1
                - (1.0 - self.p) * np.expm1(-self.rate2 * x) / self.rate2)

    def truncation_point(self, eps):
        return -math.log(eps) / min(self.rate1, self.rate2)

    def sample(self, rng, size=None):
        fast = rng.random(size) < self.p
        rate = np.where(fast, self.rate1, self.rate2)
        return rng.standard_exponential(size) / rate if size is not None \
            else rng.standard_exponential() / float(rate)


@dataclass(frozen=True)
class Discrete(Distribution):
    """Finite discrete law given as ((value, probability), ...)."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise DomainError("a discrete law needs at least one atom")
        pairs = [(float(v), float(w)) for v, w in self.atoms]
        for v, w in pairs:
            if not math.isfinite(v) or v < 0.0:
                raise DomainError(f"atom value must be finite and >= 0, got {v!r}")
            if not (w > 0.0):
                raise DomainError(f"atom probability must be positive, got {w!r}")
        total = sum(w for _, w in pairs)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"atom probabilities sum to {total!r}, expected 1")
        pairs.sort()
        values = [v for v, _ in pairs]
        if len(set(values)) != len(values):
            raise DomainError("atom values must be distinct")
        # renormalize so downstream sums treat the weights as exact
        object.__setattr__(
            self, "atoms", tuple((v, w / total) for v, w in pairs))
        object.__setattr__(
            self, "_values", np.array([v for v, _ in self.atoms]))
        object.__setattr__(
            self, "_weights", np.array([w for _, w in self.atoms]))
        object.__setattr__(self, "_cum", np.cumsum(self._weights))

    def mean(self):
        return float(self._values @ self._weights)

    def second_moment(self):
        return float((self._values**2) @ self._weights)

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self._values, x, side="right")
        # tail[k] = mass strictly beyond the k-th atom boundary
        tail = np.concatenate([[1.0], 1.0 - self._cum])
        return np.maximum(tail[idx], 0.0)[()]

    def lst(self, s):
        return float(np.exp(-s * self._values) @ self._weights)

    def integrated_survival(self, x):
        x = np.asarray(x, dtype=float)
        return (np.minimum(x[..., None], self._values) @ self._weights)[()]

    def truncation_point(self, eps):
        return float(self._values[-1])

    def sample(self, rng, size=None):
        u = rng.random(size)
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, len(self.atoms) - 1)
        return self._values[idx] if size is not None else float(self._values[idx])


def has_atom_at_zero(law: Distribution) -> bool:
    """True when the law puts positive probability on the value 0."""
    return law.atoms is not None and any(v == 0.0 and w > 0.0 for v, w in law.atoms)


def residual_lst(law: Distribution, s: float) -> float:
    """Transform of the stationary residual (equilibrium) law of Y.

    Equals (1 - lst(s)) / (s E[Y]) for s > 0 and 1 at s = 0.
    """
    if s < 0.0:
        raise DomainError("residual_lst requires s >= 0")
    if s == 0.0:
        return 1.0
    return (1.0 - law.lst(s)) / (s * law.mean())


def residual_survival(law: Distribution, x):
    """Survival function of the stationary residual law of Y."""
    return 1.0 - law.integrated_survival(x) / law.mean()


def survival_product_integral(a: Distribution, b: Distribution, s: float = 0.0,
                              moment: int = 0,
                              quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Integral of x^moment exp(-s x) S_a(x) S_b(x) over x >= 0.

    The common currency behind E[min(a, b)], its transform, and the residual
    overshoot terms. Both survival tails bound the range; atoms of either law
    become quadrature breakpoints so jumps are never smoothed over.
    """
    if isinstance(a, Exponential) and isinstance(b, Exponential):
        r = a.rate + b.rate + s
        return 1.0 / r if moment == 0 else math.factorial(moment) / r ** (moment + 1)
    hi = min(a.truncation_point(quad.tail_eps), b.truncation_point(quad.tail_eps))
    if hi <= 0.0:
        return 0.0
    breakpoints = [v for law in (a, b) if law.atoms is not None
                   for v, _ in law.atoms]

    def integrand(x):
        out = float(a.survival(x)) * float(b.survival(x))
        if s != 0.0:
            out *= math.exp(-s * x)
        if moment:
            out *= x**moment
        return out

    return _adaptive_quad(integrand, 0.0, hi, quad, breakpoints,
                          label=f"survival product ({type(a).__name__}, {type(b).__name__})")


def expected_min(a: Distribution, b: Distribution,
                 quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """E[min(A, B)] for independent A and B."""
    return survival_product_integral(a, b, 0.0, 0, quad)


def min_lst(a: Distribution, b: Distribution, s: float,
            quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """E[exp(-s min(A, B))] for independent A and B, real s >= 0."""
    if s < 0.0:
        raise DomainError("min_lst requires s >= 0")
    if s == 0.0:
        return 1.0
    return 1.0 - s * survival_product_integral(a, b, s, 0, quad)


def expectation(law: Distribution, fn, breakpoints=(),
                quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """E[fn(Y)] for a scalar function fn.

    Atomic laws are summed exactly over their atoms. Continuous laws are
    integrated against their density with the given breakpoints (kink or jump
    locations of fn) handed to the integrator.
    """
    if law.atoms is not None:
        return sum(w * fn(v) for v, w in law.atoms)
    hi = law.truncation_point(quad.tail_eps)
    return _adaptive_quad(lambda x: fn(x) * float(law.pdf(x)), 0.0, hi, quad,
                          breakpoints, label=f"expectation over {type(law).__name__}")


def completion_probability(service: Distribution, visit: Distribution,
                           quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """P[B <= V] for independent service B and visit V; ties count as success.

    Computed as E[F_B(V)], which carries the shared-atom overlap term exactly
    when both laws are atomic.
    """
    bp = [v for v, _ in service.atoms] if service.atoms is not None else ()
    return min(1.0, expectation(visit, lambda x: float(service.cdf(x)), bp, quad))


def fit_mixed_erlang(mean: float, scv: float) -> Distribution:
    """Fit a mixed-Erlang law matching the given mean and scv in (0, 1].

    Picks the stage count n with 1/n <= scv <= 1/(n-1) and the mixture weight
    and rate that reproduce both moments. At scv exactly 1 the family
    degenerates to the exponential law, which is returned directly.
    """
    mean = float(mean)
    scv = float(scv)
    if not (mean > 0.0):
        raise DomainError(f"mean must be positive, got {mean!r}")
    if not (0.0 < scv <= 1.0):
        raise DomainError(f"mixed-Erlang fit needs scv in (0, 1], got {scv!r}")
    if scv == 1.0:
        return Exponential(1.0 / mean)
    n = max(2, math.ceil(1.0 / scv - 1e-12))
    while 1.0 / n > scv:
        n += 1
    radicand = max(n * (1.0 + scv) - n * n * scv, 0.0)
    p = (n * scv - math.sqrt(radicand)) / (1.0 + scv)
    p = min(max(p, 0.0), 1.0)
    return MixedErlang(p, n, (n - p) / mean)


def fit_hyperexponential(mean: float, scv: float) -> HyperExponential:
    """Fit a balanced-means hyperexponential matching a mean and scv > 1."""
    mean = float(mean)
    scv = float(scv)
    if not (mean > 0.0):
        raise DomainError(f"mean must be positive, got {mean!r}")
    if not (scv > 1.0):
        raise DomainError(f"hyperexponential fit needs scv > 1, got {scv!r}")
    p = 0.5 * (1.0 + math.sqrt((scv - 1.0) / (scv + 1.0)))
    return HyperExponential(p, 2.0 * p / mean, 2.0 * (1.0 - p) / mean)


def fit_two_moments(mean: float, scv: float) -> Distribution:
    """Dispatch to the fitting family for the given scv.

    scv below one goes to the mixed-Erlang family, above one to the
    hyperexponential family, and exactly one to the exponential law (the two
    branches meet there).
    """
    if scv == 1.0:
        return Exponential(1.0 / float(mean))
    if scv < 1.0:
        return fit_mixed_erlang(mean, scv)
    return fit_hyperexponential(mean, scv)
