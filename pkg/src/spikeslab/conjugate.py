"""EM algorithm for the conjugate-prior spike-and-slab lasso.

Under the conjugate formulation the coefficient prior scales with the
noise level, which couples the two and drags the variance estimate
toward zero whenever the coefficients are sparse and p is comparable to
or larger than n.  This module exists to demonstrate that failure mode:
it returns modal estimates of (beta, sigma, theta) and a closed form for
the stationary sigma at the true coefficients, used as a diagnostic.

The quadratic term of the coefficient subproblem is weighted by
1/(2 sigma), not 1/(2 sigma^2); that is the conjugate model's own
scaling and is kept verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .data import Coefficients, Dataset
from .errors import DidNotConvergeError, DomainError, NotStandardizedError
from .penalty import penalty_rate_vector

__all__ = [
    "ConjEmConfig",
    "ConjEmFit",
    "em_e_step",
    "em_beta_step",
    "em_theta_step",
    "em_sigma_step",
    "run_conj_em",
    "sigma_map_at_truth",
]

_THETA_CLAMP = 1e-12


@dataclass(frozen=True)
class ConjEmConfig:
    lambda0: float
    lambda1: float = 1.0
    a: float = 1.0
    b: float | None = None
    tol: float = 1e-6
    max_iter: int = 1000
    theta_init: float = 0.5
    sigma_init: float | None = None

    def __post_init__(self):
        if not (0 < self.lambda1 <= self.lambda0):
            raise DomainError("need 0 < lambda1 <= lambda0")
        if self.a <= 0 or (self.b is not None and self.b <= 0):
            raise DomainError("a and b must be positive")
        if self.tol <= 0 or self.max_iter < 1:
            raise DomainError("tol must be positive and max_iter >= 1")
        if not (0 < self.theta_init < 1):
            raise DomainError("theta_init must lie in (0, 1)")
        if self.sigma_init is not None and self.sigma_init <= 0:
            raise DomainError("sigma_init must be positive when given")


@dataclass(frozen=True)
class ConjEmFit:
    beta: Coefficients
    sigma_hat: float
    theta_hat: float
    iterations: int
    objective_trace: tuple
    converged: bool


def em_e_step(beta: np.ndarray, sigma: float, theta: float, config: ConjEmConfig):
    """Slab probabilities and penalty rates evaluated at beta_j / sigma."""
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    beta = np.asarray(beta, dtype=np.float64)
    return penalty_rate_vector(beta / sigma, theta, config.lambda0, config.lambda1)


@njit(cache=True)
def _weighted_lasso_sweep(xt, r, beta, thresholds, n):
    p = beta.shape[0]
    max_change = 0.0
    for j in range(p):
        bj = beta[j]
        xj = xt[j]
        zj = np.dot(xj, r) + n * bj
        t = abs(zj) - thresholds[j]
        if t > 0.0:
            bn = math.copysign(t / n, zj)
        else:
            bn = 0.0
        if bn != bj:
            d = bj - bn
            for i in range(n):
                r[i] += xj[i] * d
            beta[j] = bn
            if abs(d) > max_change:
                max_change = abs(d)
    return max_change


def em_beta_step(
    dataset: Dataset,
    sigma: float,
    lambda_star_vec: np.ndarray,
    beta0: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> Coefficients:
    """Exact M-step for the coefficients: a weighted lasso.

    Minimizes ``||y - x beta||^2 / (2 sigma) + sum_j w_j |beta_j|`` by
    coordinate descent, which on the standardized design reduces to
    soft-thresholding each score at ``sigma * w_j``.
    """
    if not dataset.standardized:
        raise NotStandardizedError("solver requires a standardized dataset")
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    n, p = dataset.n, dataset.p
    w = np.asarray(lambda_star_vec, dtype=np.float64)
    if w.shape[0] != p:
        raise DomainError("weight vector length does not match design")
    xt = np.ascontiguousarray(dataset.x.T)
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    r = np.ascontiguousarray(dataset.y - dataset.x @ beta)
    thresholds = sigma * w
    for _ in range(max_iter):
        if _weighted_lasso_sweep(xt, r, beta, thresholds, n) <= tol:
            return Coefficients.from_beta(beta)
    raise DidNotConvergeError(
        f"weighted lasso did not stabilize in {max_iter} sweeps",
        fit=Coefficients.from_beta(beta),
    )


def em_theta_step(pstar_vec: np.ndarray, a: float, b: float, p: int) -> float:
    """M-step for the mixing weight, clamped away from {0, 1}."""
    theta = (float(np.sum(pstar_vec)) + a - 1.0) / (a + b + p - 2.0)
    return min(max(theta, _THETA_CLAMP), 1.0 - _THETA_CLAMP)


def em_sigma_step(rss: float, q_weight: float, n: int, p: int) -> float:
    """M-step for sigma: positive root of (n+p+2) s^2 - Q s - rss = 0."""
    if rss < 0:
        raise DomainError("rss must be nonnegative")
    denom = n + p + 2
    return (q_weight + math.sqrt(q_weight**2 + 4.0 * rss * denom)) / (2.0 * denom)


def _log_posterior(dataset, beta, sigma, theta, config, b_prior):
    r = dataset.y - dataset.x @ beta
    rss = float(r @ r)
    l0, l1 = config.lambda0, config.lambda1
    abeta = np.abs(beta)
    slab = math.log(theta) + math.log(l1 / (2 * sigma)) - abeta * l1 / sigma
    spike = math.log1p(-theta) + math.log(l0 / (2 * sigma)) - abeta * l0 / sigma
    mix = float(np.logaddexp(slab, spike).sum())
    return (
        -rss / (2.0 * sigma**2)
        - (dataset.n + 2) * math.log(sigma)
        + mix
        + (config.a - 1.0) * math.log(theta)
        + (b_prior - 1.0) * math.log1p(-theta)
    )


def run_conj_em(dataset: Dataset, config: ConjEmConfig) -> ConjEmFit:
    """Alternate E and M steps until the parameters stabilize.

    The M step updates the coefficients first and then sigma and theta
    from the same E-step quantities, so each sweep cannot decrease the
    log posterior; the objective trace records it per iteration.
    """
    if not dataset.standardized:
        raise NotStandardizedError("solver requires a standardized dataset")
    n, p = dataset.n, dataset.p
    b_prior = config.b if config.b is not None else float(p)
    beta = np.zeros(p)
    theta = config.theta_init
    sigma = (
        config.sigma_init
        if config.sigma_init is not None
        else float(np.std(dataset.y, ddof=1))
    )
    if sigma <= 0:
        raise DomainError("response has zero variance; give sigma_init explicitly")

    trace = [_log_posterior(dataset, beta, sigma, theta, config, b_prior)]
    for it in range(1, config.max_iter + 1):
        pstar, lstar = em_e_step(beta, sigma, theta, config)
        beta_new = em_beta_step(dataset, sigma, lstar, beta0=beta).beta
        theta_new = em_theta_step(pstar, config.a, b_prior, p)
        r = dataset.y - dataset.x @ beta_new
        rss = float(r @ r)
        q_weight = float(np.abs(beta_new) @ lstar)
        sigma_new = em_sigma_step(rss, q_weight, n, p)
        trace.append(_log_posterior(dataset, beta_new, sigma_new, theta_new, config, b_prior))
        diff = max(
            float(np.max(np.abs(beta_new - beta))) if p else 0.0,
            abs(sigma_new - sigma),
            abs(theta_new - theta),
        )
        beta, sigma, theta = beta_new, sigma_new, theta_new
        if diff < config.tol:
            return ConjEmFit(
                Coefficients.from_beta(beta), sigma, theta, it, tuple(trace), True
            )
    raise DidNotConvergeError(
        f"EM did not stabilize in {config.max_iter} iterations",
        fit=ConjEmFit(Coefficients.from_beta(beta), sigma, theta, config.max_iter, tuple(trace), False),
    )


def sigma_map_at_truth(
    beta_true_l1: float, sigma_oracle: float, n: int, p: int, lambda1: float
) -> float:
    """Closed-form stationary sigma at the true coefficients.

    With ``tau = lambda1 * ||beta*||_1 / (2 (n+p+2))`` this is
    ``tau + sqrt(tau^2 + sigma*^2 / (1 + p/n + 2/n))``; it tends to the
    oracle value as n grows with p fixed and to zero when p/n explodes
    with sparse truth, quantifying the conjugate model's bias.
    """
    if beta_true_l1 < 0 or sigma_oracle <= 0 or lambda1 < 0:
        raise DomainError("inputs must be positive")
    tau = lambda1 * beta_true_l1 / (2.0 * (n + p + 2))
    return tau + math.sqrt(tau**2 + sigma_oracle**2 / (1.0 + p / n + 2.0 / n))
