"""Plain-lasso coordinate descent and the scaled lasso.

Penalty convention: ``lam`` is the coefficient of the L1 term in the
objective ``0.5*||y - x beta||^2 + lam*sum(|beta_j|)``.  On a
standardized design (column norms sqrt(n)) the coordinate update is then
``beta_j = soft(z_j, lam)/n``, matching the 1/n thresholding used by the
spike-and-slab solver, whose fixed-variance single-rung special case
coincides with the lasso at ``lam = sigma2*lambda1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import ndtri

from .data import Coefficients, Dataset, residual_ss
from .errors import DidNotConvergeError, DimensionMismatchError, DomainError, NotStandardizedError

__all__ = [
    "lasso_cd",
    "lasso_kkt_violation",
    "universal_lambda0",
    "lambda0_log_heuristic",
    "ScaledLassoFit",
    "scaled_lasso",
    "oracle_sigma2",
]


@njit(cache=True)
def _lasso_sweep(xt, r, beta, lam, n):
    """One pass of coordinate descent; returns the largest coefficient change."""
    p = beta.shape[0]
    max_change = 0.0
    for j in range(p):
        bj = beta[j]
        xj = xt[j]
        zj = np.dot(xj, r) + n * bj
        t = abs(zj) - lam
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


def _require_standardized(dataset: Dataset):
    if not dataset.standardized:
        raise NotStandardizedError("solver requires a standardized dataset")


def lasso_kkt_violation(dataset: Dataset, beta: np.ndarray, lam: float) -> float:
    """Largest stationarity violation of the lasso optimality conditions."""
    r = dataset.y - dataset.x @ beta
    grad = dataset.x.T @ r
    active = beta != 0.0
    viol = 0.0
    if active.any():
        viol = float(np.abs(grad[active] - lam * np.sign(beta[active])).max())
    if (~active).any():
        viol = max(viol, float(np.maximum(np.abs(grad[~active]) - lam, 0.0).max()))
    return viol


def lasso_cd(
    dataset: Dataset,
    lam: float,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    beta0: np.ndarray | None = None,
) -> Coefficients:
    """Coordinate-descent lasso on a standardized dataset.

    Iterates full sweeps until the KKT conditions hold within ``tol``:
    ``|x_j' r| <= lam + tol`` for every excluded coordinate and
    ``x_j' r = lam*sign(beta_j) +- tol`` for every included one.
    """
    _require_standardized(dataset)
    if lam < 0:
        raise DomainError("lam must be nonnegative")
    n, p = dataset.n, dataset.p
    xt = np.ascontiguousarray(dataset.x.T)
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=np.float64)
    r = dataset.y - dataset.x @ beta if beta0 is not None else dataset.y.copy()
    r = np.ascontiguousarray(r)

    check_gate = max(tol / max(n, 1), 1e-15)
    for sweep in range(1, max_iter + 1):
        max_change = _lasso_sweep(xt, r, beta, lam, n)
        if max_change <= check_gate or sweep % 25 == 0:
            if lasso_kkt_violation(dataset, beta, lam) <= tol:
                return Coefficients.from_beta(beta)
    raise DidNotConvergeError(
        f"lasso did not satisfy KKT within {max_iter} sweeps",
        fit=Coefficients.from_beta(beta),
    )


def _gauss_upper_quantile(t: float) -> float:
    return float(ndtri(1.0 - t))


def universal_lambda0(n: int, p: int) -> float:
    """Universal penalty level for the scaled lasso.

    Solves the scalar fixed point ``k = L1(k/p)^4 + 2*L1(k/p)^2`` with
    ``L1(t)`` the upper standard-normal quantile, by bisection on
    ``(0, p/2)``, and returns ``sqrt(2) * L1(k/p) / sqrt(n)``.
    """
    if p < 2 or n < 1:
        raise DomainError("need p >= 2 and n >= 1")

    def gap(k: float) -> float:
        q = _gauss_upper_quantile(k / p)
        return k - (q**4 + 2.0 * q**2)

    lo, hi = 1e-12 * p, p / 2.0
    glo, ghi = gap(lo), gap(hi)
    if not (glo < 0.0 < ghi):
        raise DidNotConvergeError("no sign change bracketing the penalty fixed point")
    for _ in range(1000):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * p:
            break
    else:
        raise DidNotConvergeError("penalty fixed point not bracketed to tolerance")
    k = 0.5 * (lo + hi)
    return math.sqrt(2.0) * _gauss_upper_quantile(k / p) / math.sqrt(n)


def lambda0_log_heuristic(n: int, p: int, a: float = 1.1) -> float:
    """Simpler penalty level a*sqrt(2*log(p)/n) with a > 1."""
    if a <= 1.0:
        raise DomainError("a must exceed 1")
    return a * math.sqrt(2.0 * math.log(p) / n)


@dataclass(frozen=True)
class ScaledLassoFit:
    """Joint estimate of coefficients and noise scale."""

    beta: Coefficients
    sigma_hat: float
    lambda0: float
    iterations: int
    degenerate: bool = False


def scaled_lasso(
    dataset: Dataset,
    lambda0: float,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> ScaledLassoFit:
    """Alternate lasso steps with the noise-scale stationary point.

    Minimizes ``||y - x beta||^2/(2 sigma) + n sigma/2 + n lambda0 sum|beta_j|``
    by alternating ``sigma <- ||r||/sqrt(n)`` with a lasso step at penalty
    ``n*sigma*lambda0``, stopping when sigma changes by less than ``tol``.
    """
    _require_standardized(dataset)
    if lambda0 <= 0:
        raise DomainError("lambda0 must be positive")
    n = dataset.n
    y_norm2 = float(dataset.y @ dataset.y)
    sigma_floor = 1e-8 * math.sqrt(y_norm2 / max(n - 1, 1))
    sigma = math.sqrt(y_norm2 / n)
    beta = np.zeros(dataset.p)
    for it in range(1, max_iter + 1):
        coef = lasso_cd(dataset, n * sigma * lambda0, tol=1e-8, beta0=beta)
        beta = coef.beta
        ss = residual_ss(dataset, coef)
        sigma_new = math.sqrt(ss / n)
        if sigma_new < sigma_floor:
            return ScaledLassoFit(coef, sigma_floor, lambda0, it, degenerate=True)
        if abs(sigma_new - sigma) < tol:
            return ScaledLassoFit(coef, sigma_new, lambda0, it)
        sigma = sigma_new
    raise DidNotConvergeError(
        f"scaled lasso did not stabilize in {max_iter} alternations",
        fit=ScaledLassoFit(Coefficients.from_beta(beta), sigma, lambda0, max_iter),
    )


def oracle_sigma2(dataset: Dataset, beta_true: np.ndarray) -> float:
    """Noise variance estimate ||y - x beta_true||^2 / n at known coefficients."""
    beta_true = np.asarray(beta_true, dtype=np.float64)
    if beta_true.shape[0] != dataset.p:
        raise DimensionMismatchError("beta_true length does not match design")
    return residual_ss(dataset, Coefficients.from_beta(beta_true)) / dataset.n
