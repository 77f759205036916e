"""Numerical checks of the prior-concentration results.

Each closed-form evaluator is paired with an independent Monte Carlo
oracle so the stated inequalities can be verified at 3-standard-error
tolerance.  ``run_theory_suite`` bundles every check into a pass/fail
table for the CLI.

Inverse-gamma draws are taken as scale over a gamma variate, itself
produced by the generator's standard rejection sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DimensionMismatchError, DomainError
from .rng import RngSpec

__all__ = [
    "SparseBetaSpec",
    "GlobalLocalSpec",
    "conjugate_tail_bound",
    "conjugate_tail_mc",
    "ig1_upper_tail",
    "ig1_tail_mc",
    "p_sigma_tail_bound",
    "horseshoe_conditional_sigma",
    "global_local_sigma_bound",
    "make_global_local_instance",
    "run_theory_suite",
]


@dataclass(frozen=True)
class SparseBetaSpec:
    """Sparse coefficient vector summarized by its nonzero values."""

    p: int
    q: int
    values: tuple
    tau2: float
    sigma0_2: float

    def __post_init__(self):
        if self.q > self.p:
            raise DomainError("q cannot exceed p")
        if len(self.values) != self.q:
            raise DomainError("values must list exactly q nonzero entries")
        if any(v == 0 for v in self.values):
            raise DomainError("values must be nonzero")
        if self.tau2 <= 0 or self.sigma0_2 <= 0:
            raise DomainError("tau2 and sigma0_2 must be positive")

    @property
    def beta_ss(self) -> float:
        return float(sum(v * v for v in self.values))

    @property
    def max_sq(self) -> float:
        return max((v * v for v in self.values), default=0.0)

    @property
    def min_sq(self) -> float:
        return min((v * v for v in self.values), default=0.0)


@dataclass(frozen=True)
class GlobalLocalSpec:
    """Global-local prior scales and a coefficient vector."""

    tau2: float
    lambda2: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambda2, dtype=np.float64)
        beta = np.asarray(self.beta, dtype=np.float64)
        if lam.shape != beta.shape:
            raise DimensionMismatchError("lambda2 and beta must have equal length")
        if self.tau2 <= 0 or (lam <= 0).any():
            raise DomainError("variance scales must be positive")
        object.__setattr__(self, "lambda2", lam)
        object.__setattr__(self, "beta", beta)


def conjugate_tail_bound(spec: SparseBetaSpec, eps: float) -> float:
    """Markov bound on the coupled prior's mass above eps * sigma0^2.

    Equals ``(q / (p-2)) * (K / tau2) / (eps * sigma0^2)`` with K the
    largest squared nonzero coefficient; 0 for an empty support.
    Scales as 1/eps.
    """
    if spec.p <= 2:
        raise DomainError("need p > 2")
    if eps <= 0:
        raise DomainError("eps must be positive")
    if spec.q == 0:
        return 0.0
    return (spec.q / (spec.p - 2)) * (spec.max_sq / spec.tau2) / (eps * spec.sigma0_2)


def _inverse_gamma_draws(shape: float, scale: float, draws: int, gen) -> np.ndarray:
    return scale / gen.standard_gamma(shape, size=draws)


def conjugate_tail_mc(spec: SparseBetaSpec, eps: float, draws: int, rng: RngSpec):
    """Monte Carlo estimate (and its standard error) of the same tail.

    Draws sigma2 from the implied inverse-gamma conditional with shape
    p/2 and scale ||beta||^2 / (2 tau2).
    """
    if spec.q == 0:
        return 0.0, 0.0
    gen = rng.generator()
    s2 = _inverse_gamma_draws(spec.p / 2.0, spec.beta_ss / (2.0 * spec.tau2), draws, gen)
    est = float(np.mean(s2 / spec.sigma0_2 >= eps))
    se = math.sqrt(est * (1.0 - est) / draws)
    return est, se


def ig1_upper_tail(beta_ss_over_tau2: float, eps_sigma0_2: float) -> float:
    """Exact upper tail of an inverse-gamma with unit shape.

    For scale ``s = beta_ss_over_tau2 / 2`` and cutoff ``v`` this is
    ``1 - exp(-s/v)``: the prior mass the flat-adjusted prior places
    above ``v``, which drives its overestimation.
    """
    if beta_ss_over_tau2 < 0 or eps_sigma0_2 <= 0:
        raise DomainError("need nonnegative mass and positive cutoff")
    return -math.expm1(-beta_ss_over_tau2 / (2.0 * eps_sigma0_2))


def ig1_tail_mc(scale: float, cutoff: float, draws: int, rng: RngSpec):
    """Empirical tail frequency of IG(1, scale) above ``cutoff``."""
    gen = rng.generator()
    s2 = _inverse_gamma_draws(1.0, scale, draws, gen)
    est = float(np.mean(s2 >= cutoff))
    return est, math.sqrt(est * (1.0 - est) / draws)


def p_sigma_tail_bound(
    beta_ss: float, tau2: float, eps: float, sigma0_2: float, qk: float
):
    """Exact tail and its advertised lower bound for the flat-adjusted prior.

    Returns ``(tail, bound)`` where the bound substitutes ``qk`` (count
    of nonzeros times the smallest squared nonzero value, so qk <=
    ||beta||^2) for the full sum of squares; they coincide when every
    nonzero coefficient has the same magnitude.
    """
    if min(beta_ss, tau2, eps, sigma0_2) <= 0 or qk < 0:
        raise DomainError("inputs must be positive")
    v = eps * sigma0_2
    tail = ig1_upper_tail(beta_ss / tau2, v)
    bound = -math.expm1(-qk / (2.0 * v * tau2))
    return tail, bound


def horseshoe_conditional_sigma(dataset: Dataset, spec: GlobalLocalSpec) -> float:
    """Conditional posterior mean of sigma2 under a global-local coupled prior.

    ``(||y - x beta||^2 + sum_j beta_j^2 / (lambda_j^2 tau2)) / (n + p - 2)``.
    """
    if spec.beta.shape[0] != dataset.p:
        raise DimensionMismatchError("beta length does not match design")
    r = dataset.y - dataset.x @ spec.beta
    prior_mass = float(np.sum(spec.beta**2 / (spec.lambda2 * spec.tau2)))
    return (float(r @ r) + prior_mass) / (dataset.n + dataset.p - 2)


def global_local_sigma_bound(
    q: int, m1: float, m2: float, n: int, p: int, sigma_star2: float
) -> float:
    """Upper bound on the conditional mean at the true coefficients.

    ``(n sigma*^2 + q M1 / M2) / (n + p - 2)`` where M1 bounds squared
    signals from above and M2 bounds the support's variance products
    from below; vanishes as p/n grows with sparse truth.
    """
    return (n * sigma_star2 + q * m1 / m2) / (n + p - 2)


def make_global_local_instance(
    n: int, p: int, q: int, m2: float, sigma0_2: float, rng: RngSpec
):
    """Generate a dataset and prior spec satisfying the bound's hypotheses.

    Support variance products are drawn in [M2, 10 M2]; off-support
    local scales are tiny so thresholded-to-zero coordinates contribute
    nothing.  Returns ``(dataset, spec, beta_true, m1)``.
    """
    gen = rng.generator()
    x = gen.standard_normal((n, p))
    beta = np.zeros(p)
    support = gen.choice(p, size=q, replace=False)
    beta[support] = gen.uniform(1.0, 2.0, size=q) * gen.choice([-1.0, 1.0], size=q)
    y = x @ beta + math.sqrt(sigma0_2) * gen.standard_normal(n)
    tau2 = 1.0
    lambda2 = np.full(p, 1e-6)
    lambda2[support] = gen.uniform(m2, 10.0 * m2, size=q) / tau2
    dataset = Dataset.from_arrays(x, y)
    spec = GlobalLocalSpec(tau2=tau2, lambda2=lambda2, beta=beta)
    m1 = float(np.max(beta[support] ** 2))
    return dataset, spec, beta, m1


def _check(name: str, passed: bool, **details) -> dict:
    row = {"name": name, "passed": bool(passed)}
    row.update(details)
    return row


def run_theory_suite(rng: RngSpec = RngSpec(0), draws: int = 100_000) -> list[dict]:
    """Run every proposition check; returns one pass/fail row per check."""
    rows = []

    gen = rng.generator()
    for i in range(20):
        q = int(gen.integers(1, 9))
        p = int(gen.integers(max(q + 3, 10), 200))
        values = tuple(gen.uniform(0.5, 3.0, size=q) * gen.choice([-1.0, 1.0], size=q))
        spec = SparseBetaSpec(
            p=p, q=q, values=values,
            tau2=float(gen.uniform(0.5, 100.0)),
            sigma0_2=float(gen.uniform(0.5, 5.0)),
        )
        eps = float(gen.uniform(0.1, 2.0))
        bound = conjugate_tail_bound(spec, eps)
        est, se = conjugate_tail_mc(spec, eps, draws, rng.stream(1000 + i))
        rows.append(
            _check(
                f"conjugate-tail-bound[{i}]",
                est <= bound + 3.0 * se,
                bound=bound, estimate=est, mc_se=se,
            )
        )

    for i, (s, v) in enumerate([(4.0, 1.0), (0.5, 1.0), (2.0, 4.0), (1.0, 0.25), (3.0, 2.0)]):
        exact = ig1_upper_tail(2.0 * s, v)
        est, se = ig1_tail_mc(s, v, draws, rng.stream(2000 + i))
        tol = 3.0 * max(se, math.sqrt(exact * (1.0 - exact) / draws))
        rows.append(
            _check(
                f"ig-tail-exact-vs-mc[{i}]",
                abs(est - exact) <= tol,
                exact=exact, estimate=est, mc_se=se,
            )
        )

    for i in range(20):
        q = int(gen.integers(1, 9))
        vals = gen.uniform(0.5, 3.0, size=q)
        beta_ss = float(np.sum(vals**2))
        qk = q * float(np.min(vals**2))
        tail, bound = p_sigma_tail_bound(
            beta_ss,
            float(gen.uniform(0.5, 50.0)),
            float(gen.uniform(0.1, 2.0)),
            float(gen.uniform(0.5, 5.0)),
            qk,
        )
        rows.append(
            _check(f"p-sigma-tail-bound[{i}]", tail >= bound - 1e-12, tail=tail, bound=bound)
        )

    for i in range(10):
        n, p, q = 50, 500, 5
        m2 = float(rng.stream(3000 + i).generator().uniform(0.5, 2.0))
        dataset, spec, beta_true, m1 = make_global_local_instance(
            n, p, q, m2, sigma0_2=1.0, rng=rng.stream(4000 + i)
        )
        sigma_star2 = float(np.sum((dataset.y - dataset.x @ beta_true) ** 2)) / n
        value = horseshoe_conditional_sigma(dataset, spec)
        bound = global_local_sigma_bound(q, m1, m2, n, p, sigma_star2)
        rows.append(
            _check(f"global-local-bound[{i}]", value <= bound + 1e-12, value=value, bound=bound)
        )

    n, p, q = 50, 1000, 10
    dataset, spec, beta_true, m1 = make_global_local_instance(
        n, p, q, m2=1.0, sigma0_2=1.0, rng=rng.stream(5000)
    )
    sigma_star2 = float(np.sum((dataset.y - dataset.x @ beta_true) ** 2)) / n
    value = horseshoe_conditional_sigma(dataset, spec)
    rows.append(
        _check(
            "global-local-vanishing",
            value < 0.2 * sigma_star2,
            value=value, sigma_star2=sigma_star2,
        )
    )

    # monotonicity of the conditional-mean formula itself: larger
    # beta_j^2 raises it, larger lambda_j^2 lowers it
    gen2 = rng.stream(6000).generator()
    x = gen2.standard_normal((20, 3))
    ds0 = Dataset.from_arrays(x, np.zeros(20))
    mono_ok = True
    prev = -math.inf
    for b in np.linspace(0.1, 2.0, 8):
        val = horseshoe_conditional_sigma(
            ds0, GlobalLocalSpec(tau2=1.0, lambda2=np.ones(3), beta=np.array([b, 0.0, 0.0]))
        )
        mono_ok &= val > prev
        prev = val
    prev = math.inf
    for lam in np.linspace(0.1, 2.0, 8):
        val = horseshoe_conditional_sigma(
            ds0,
            GlobalLocalSpec(
                tau2=1.0, lambda2=np.array([lam, 1.0, 1.0]), beta=np.array([1.0, 0.0, 0.0])
            ),
        )
        mono_ok &= val < prev
        prev = val
    rows.append(_check("global-local-monotone", mono_ok))

    return rows
