"""Spike-and-slab penalty machinery.

The prior on each coefficient mixes two Laplace densities: a sharp spike
with rate ``lambda0`` and a diffuse slab with rate ``lambda1 <= lambda0``.
Everything the coordinate solver needs derives from the conditional
probability that a coefficient of a given magnitude came from the slab:
the adaptive penalty rate interpolating the two Laplace rates, the
(nonpositive) log-prior penalty, and the magnitude threshold below which
a coordinate is set to exactly zero.

The ``_*`` kernels are numba-compiled scalar cores shared with the
solver's hot loop; the public wrappers validate their arguments.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import DomainError

__all__ = [
    "slab_probability",
    "penalty_rate",
    "mixture_penalty",
    "update_mixing_weight",
    "threshold_discriminant",
    "selection_threshold",
    "generalized_threshold",
]


@njit(cache=True)
def _slab_prob(beta, theta, lambda0, lambda1):
    ratio = (lambda0 / lambda1) * ((1.0 - theta) / theta)
    return 1.0 / (1.0 + ratio * math.exp(-abs(beta) * (lambda0 - lambda1)))


@njit(cache=True)
def _log_slab_prob(beta, theta, lambda0, lambda1):
    ratio = (lambda0 / lambda1) * ((1.0 - theta) / theta)
    return -math.log1p(ratio * math.exp(-abs(beta) * (lambda0 - lambda1)))


@njit(cache=True)
def _penalty_rate(beta, theta, lambda0, lambda1):
    p = _slab_prob(beta, theta, lambda0, lambda1)
    return lambda1 * p + lambda0 * (1.0 - p)


@njit(cache=True)
def _mixture_penalty(beta, theta, lambda0, lambda1):
    # log p*(0) - log p*(beta) computed via log1p for small-theta stability
    return -lambda1 * abs(beta) + _log_slab_prob(0.0, theta, lambda0, lambda1) - _log_slab_prob(
        beta, theta, lambda0, lambda1
    )


@njit(cache=True)
def _discriminant(x, theta, sigma_weight, n, lambda0, lambda1):
    rate_gap = _penalty_rate(x, theta, lambda0, lambda1) - lambda1
    return rate_gap * rate_gap + (2.0 * n / sigma_weight) * _log_slab_prob(
        x, theta, lambda0, lambda1
    )


@njit(cache=True)
def _threshold(theta, sigma_weight, n, lambda0, lambda1):
    if _discriminant(0.0, theta, sigma_weight, n, lambda0, lambda1) > 0.0:
        log_inv_p0 = -_log_slab_prob(0.0, theta, lambda0, lambda1)
        return math.sqrt(2.0 * n * sigma_weight * log_inv_p0) + sigma_weight * lambda1
    return sigma_weight * _penalty_rate(0.0, theta, lambda0, lambda1)


@njit(cache=True)
def _gen_threshold(z, lam, delta, n):
    if abs(z) <= delta:
        return 0.0
    t = abs(z) - lam
    if t <= 0.0:
        return 0.0
    return math.copysign(t / n, z)


def _check_rates(theta, lambda0, lambda1):
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    if not (0.0 < lambda1 <= lambda0):
        raise DomainError(f"need 0 < lambda1 <= lambda0, got {lambda1}, {lambda0}")


def slab_probability(beta: float, theta: float, lambda0: float, lambda1: float) -> float:
    """Conditional probability that a coefficient of size ``beta`` is slab-drawn.

    Lies in (0, 1) and is nondecreasing in ``abs(beta)``; equals ``theta``
    when the two rates coincide.
    """
    _check_rates(theta, lambda0, lambda1)
    return float(_slab_prob(beta, theta, lambda0, lambda1))


def penalty_rate(beta: float, theta: float, lambda0: float, lambda1: float) -> float:
    """Adaptive Laplace rate: slab rate for large, spike rate for small beta.

    Interpolates between ``lambda1`` and ``lambda0`` through the slab
    probability, hence nonincreasing in ``abs(beta)``.
    """
    _check_rates(theta, lambda0, lambda1)
    return float(_penalty_rate(beta, theta, lambda0, lambda1))


def mixture_penalty(beta: float, theta: float, lambda0: float, lambda1: float) -> float:
    """Log-prior penalty of the two-Laplace mixture, normalized to 0 at beta=0.

    Nonpositive, with derivative in ``abs(beta)`` equal to minus the
    adaptive penalty rate.
    """
    _check_rates(theta, lambda0, lambda1)
    return float(_mixture_penalty(beta, theta, lambda0, lambda1))


def update_mixing_weight(nnz: int, a: float, b: float, p: int) -> float:
    """Posterior-expected slab fraction given ``nnz`` active coefficients."""
    return (a + nnz) / (a + b + p)


def threshold_discriminant(
    x: float, theta: float, sigma2: float, n: int, lambda0: float, lambda1: float
) -> float:
    """Sign decides which branch of the selection threshold is tight.

    ``sigma2`` is the squared-error weight; the scaled variant of the
    solver passes sigma in its place.
    """
    _check_rates(theta, lambda0, lambda1)
    if sigma2 <= 0.0:
        raise DomainError("sigma2 must be positive")
    return float(_discriminant(x, theta, sigma2, n, lambda0, lambda1))


def selection_threshold(
    theta: float, sigma2: float, n: int, lambda0: float, lambda1: float
) -> float:
    """Score magnitude below which a coordinate is set exactly to zero.

    Uses the refined bound when the discriminant at zero is positive and
    the plain rate bound otherwise.  Nondecreasing in ``sigma2``.
    """
    _check_rates(theta, lambda0, lambda1)
    if sigma2 <= 0.0:
        raise DomainError("sigma2 must be positive")
    return float(_threshold(theta, sigma2, n, lambda0, lambda1))


def generalized_threshold(z: float, lam: float, delta: float, n: int) -> float:
    """Soft-threshold ``z`` by ``lam`` and scale by 1/n, zeroed when |z| <= delta."""
    if lam < 0.0 or delta < 0.0 or n < 1:
        raise DomainError("lam and delta must be nonnegative and n >= 1")
    return float(_gen_threshold(z, lam, delta, n))


def penalty_rate_vector(beta: np.ndarray, theta: float, lambda0: float, lambda1: float):
    """Vectorized slab probabilities and penalty rates (validated once)."""
    _check_rates(theta, lambda0, lambda1)
    beta = np.asarray(beta, dtype=np.float64)
    ratio = (lambda0 / lambda1) * ((1.0 - theta) / theta)
    pstar = 1.0 / (1.0 + ratio * np.exp(-np.abs(beta) * (lambda0 - lambda1)))
    return pstar, lambda1 * pstar + lambda0 * (1.0 - pstar)
