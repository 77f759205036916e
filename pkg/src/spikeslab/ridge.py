"""Bayesian ridge regression estimators and the independence-prior Gibbs sampler.

The closed-form estimators illustrate how a coefficient prior that
scales with the noise variance biases the variance estimate downward
when the truth is sparse, while the independence prior (sampled by
Gibbs) and plain least squares stay centered.  All estimators return a
:class:`RidgeEstimates` record; the sampler returns the full chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .data import Dataset
from .errors import (
    DomainError,
    InsufficientDofError,
    NonFiniteInputError,
    SingularDesignError,
)
from .rng import RngSpec

__all__ = [
    "RidgeEstimates",
    "GibbsChain",
    "least_squares",
    "conjugate_ridge",
    "zellner",
    "conditional_sigma_conjugate",
    "conditional_sigma_independent",
    "conditional_beta_independent",
    "draw_beta_conditional",
    "gibbs_independent_ridge",
]


@dataclass(frozen=True)
class RidgeEstimates:
    beta_mean: np.ndarray
    sigma2_estimate: float
    estimator_kind: str
    tau2_or_g: float


@dataclass(frozen=True)
class GibbsChain:
    """Posterior draws with burn-in metadata.

    ``beta_draws`` has one row per retained-or-burned iteration;
    summaries use the rows after ``burn_in``.
    """

    beta_draws: np.ndarray
    sigma2_draws: np.ndarray
    burn_in: int
    rng: RngSpec

    def posterior_mean_beta(self) -> np.ndarray:
        return self.beta_draws[self.burn_in :].mean(axis=0)

    def posterior_mean_sigma2(self) -> float:
        return float(self.sigma2_draws[self.burn_in :].mean())

    def estimates(self, tau2: float) -> RidgeEstimates:
        return RidgeEstimates(
            beta_mean=self.posterior_mean_beta(),
            sigma2_estimate=self.posterior_mean_sigma2(),
            estimator_kind="independent_gibbs",
            tau2_or_g=tau2,
        )

    def to_csv(self, path):
        """One row per retained draw: sigma2 followed by the beta entries."""
        kept = np.column_stack(
            [self.sigma2_draws[self.burn_in :], self.beta_draws[self.burn_in :]]
        )
        with open(path, "w", encoding="utf-8") as fh:
            for row in kept:
                fh.write(",".join(repr(v) for v in row))
                fh.write("\n")


def _gram(dataset: Dataset):
    x, y = dataset.x, dataset.y
    return x.T @ x, x.T @ y


def _chol_solve_spd(a: np.ndarray, rhs: np.ndarray):
    try:
        c = cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError(str(exc)) from None
    return cho_solve(c, rhs)


def least_squares(dataset: Dataset) -> RidgeEstimates:
    """Ordinary least squares with the flat-prior variance estimate.

    The variance divides the residual sum of squares by n - p - 2, the
    marginal posterior mean under independent flat priors.
    """
    n, p = dataset.n, dataset.p
    if n <= p + 2:
        raise InsufficientDofError(f"need n > p + 2, got n={n}, p={p}")
    xtx, xty = _gram(dataset)
    beta = _chol_solve_spd(xtx, xty)
    r = dataset.y - dataset.x @ beta
    return RidgeEstimates(beta, float(r @ r) / (n - p - 2), "least_squares", float("inf"))


def conjugate_ridge(dataset: Dataset, tau2: float) -> RidgeEstimates:
    """Posterior means under the variance-coupled ridge prior.

    beta mean solves (X'X + I/tau2); the variance estimate divides by
    n - 2 with no degrees-of-freedom adjustment, which is exactly why it
    underestimates for sparse truths.
    """
    if tau2 <= 0 or not np.isfinite(tau2):
        raise NonFiniteInputError("tau2 must be positive and finite")
    n, p = dataset.n, dataset.p
    xtx, xty = _gram(dataset)
    beta = _chol_solve_spd(xtx + np.eye(p) / tau2, xty)
    sigma2 = float(dataset.y @ dataset.y - dataset.y @ (dataset.x @ beta)) / (n - 2)
    return RidgeEstimates(beta, sigma2, "conjugate_ridge", tau2)


def zellner(dataset: Dataset, g: float) -> RidgeEstimates:
    """Posterior means under the g-prior: shrunk least squares.

    The variance estimate mirrors the conjugate-ridge marginal form with
    the g-prior hat matrix, again without a degrees-of-freedom adjustment.
    """
    if g <= 0:
        raise DomainError("g must be positive")
    n = dataset.n
    xtx, xty = _gram(dataset)
    beta_ls = _chol_solve_spd(xtx, xty)
    shrink = g / (1.0 + g)
    beta = shrink * beta_ls
    sigma2 = float(dataset.y @ dataset.y - shrink * (dataset.y @ (dataset.x @ beta_ls))) / (
        n - 2
    )
    return RidgeEstimates(beta, sigma2, "zellner", g)


def conditional_sigma_conjugate(beta: np.ndarray, dataset: Dataset, tau2: float) -> float:
    """E[sigma2 | y, beta] under the coupled prior: note the n + p - 2 divisor."""
    beta = np.asarray(beta, dtype=np.float64)
    r = dataset.y - dataset.x @ beta
    return (float(r @ r) + float(beta @ beta) / tau2) / (dataset.n + dataset.p - 2)


def conditional_sigma_independent(beta: np.ndarray, dataset: Dataset) -> float:
    """E[sigma2 | y, beta] under the independence prior."""
    beta = np.asarray(beta, dtype=np.float64)
    r = dataset.y - dataset.x @ beta
    return float(r @ r) / (dataset.n - 2)


def conditional_beta_independent(dataset: Dataset, sigma2: float, tau2: float) -> np.ndarray:
    """E[beta | sigma2, y] under the independence prior: a ridge solve."""
    if sigma2 <= 0 or tau2 <= 0:
        raise DomainError("sigma2 and tau2 must be positive")
    xtx, xty = _gram(dataset)
    return _chol_solve_spd(xtx + (sigma2 / tau2) * np.eye(dataset.p), xty)


def _beta_draw(xtx, xty, sigma2, tau2, p, gen):
    a = xtx / sigma2 + np.eye(p) / tau2
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError(str(exc)) from None
    mean = cho_solve((low, True), xty / sigma2)
    z = gen.standard_normal(p)
    return mean + solve_triangular(low.T, z, lower=False)


def draw_beta_conditional(
    dataset: Dataset, sigma2: float, tau2: float, rng: RngSpec, size: int = 1
) -> np.ndarray:
    """Exact draws from the coefficient full conditional at fixed sigma2."""
    if sigma2 <= 0 or tau2 <= 0:
        raise DomainError("sigma2 and tau2 must be positive")
    xtx, xty = _gram(dataset)
    gen = rng.generator()
    return np.vstack(
        [_beta_draw(xtx, xty, sigma2, tau2, dataset.p, gen) for _ in range(size)]
    )


def gibbs_independent_ridge(
    dataset: Dataset,
    tau2: float,
    iterations: int = 5000,
    burn_in: int = 1000,
    rng: RngSpec = RngSpec(0),
) -> GibbsChain:
    """Gibbs sampler for the independence-prior ridge model.

    Alternates the Gaussian full conditional of the coefficients with
    the inverse-gamma full conditional of the variance (shape n/2, scale
    rss/2).  Deterministic given the rng spec.
    """
    if tau2 <= 0:
        raise DomainError("tau2 must be positive")
    if not (iterations > burn_in >= 0):
        raise DomainError("need iterations > burn_in >= 0")
    n, p = dataset.n, dataset.p
    xtx, xty = _gram(dataset)
    gen = rng.generator()
    sigma2 = float(np.var(dataset.y, ddof=1))
    if sigma2 <= 0:
        sigma2 = 1.0
    beta_draws = np.empty((iterations, p))
    sigma2_draws = np.empty(iterations)
    for t in range(iterations):
        beta = _beta_draw(xtx, xty, sigma2, tau2, p, gen)
        r = dataset.y - dataset.x @ beta
        rss = float(r @ r)
        sigma2 = (rss / 2.0) / gen.standard_gamma(n / 2.0)
        beta_draws[t] = beta
        sigma2_draws[t] = sigma2
    return GibbsChain(beta_draws, sigma2_draws, burn_in, rng)
