"""Spike-and-slab lasso solver with optional noise-variance estimation.

The solver runs coordinate ascent over an increasing ladder of spike
rates in two phases.  The exploration phase warm-starts each rung from
the previous one with the noise variance frozen at its initial value;
the first rungs are deliberately near-unpenalized and badly overfitted.
Once a rung converges in fewer than 100 iterations the ladder has
reached stable territory: the coefficients, the mixing weight, and the
variance are reinitialized, discarding the overfitted exploration
state, and from the next rung onward the variance is updated alongside
the coefficients.  The restart both prevents the variance estimate from
being absorbed near zero by an interpolating fit and keeps selection
driven by the coordinate scores rather than by whichever correlated
column happened to soak up signal in the overfitted early rungs.

Within a rung the solver repeats full passes over the coordinates in
blocks of ``update_frequency_m``: the selection threshold is recomputed
before each block, the mixing weight after each block, and (once live)
the noise variance after each block.

Three variance modes share the machinery:

- ``fixed``: the squared-error weight is a constant ``sigma2``.
- ``unknown``: weight ``sigma2``, refreshed as ``rss/(n+2)``.
- ``scaled``: weight ``sigma`` (not squared), refreshed as ``rss/n``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.stats import chi2

from .data import Coefficients, Dataset
from .errors import (
    DegenerateFitError,
    DidNotConvergeError,
    DimensionMismatchError,
    DomainError,
    NotStandardizedError,
)
from .penalty import (
    _gen_threshold,
    _penalty_rate,
    _threshold,
    penalty_rate_vector,
    slab_probability,
    penalty_rate,
    threshold_discriminant,
    selection_threshold,
)
from .rng import RngSpec

__all__ = [
    "SslConfig",
    "PenaltyState",
    "LadderRecord",
    "SslFit",
    "KktReport",
    "sigma2_newton",
    "sigma2_adjusted",
    "init_sigma2",
    "coordinate_sweep",
    "fit_ssl",
    "kkt_certificate",
]

VARIANCE_MODES = ("fixed", "unknown", "scaled")

# iteration count treated as "previous rung never converged"
_K_INF = 10**9


@dataclass(frozen=True)
class SslConfig:
    """Solver configuration.

    ``b=None`` resolves to the number of predictors at fit time, the
    usual weakly-informative choice for the mixing-weight prior.
    ``sigma2_init=None`` selects the scaled-inverse-chi-squared mode
    calibrated to the sample variance of y (see :func:`init_sigma2`);
    an explicit positive value overrides it.
    """

    lambda0_ladder: tuple
    lambda1: float = 1.0
    a: float = 1.0
    b: float | None = None
    update_frequency_m: int = 10
    tol_eps: float = 1e-3
    max_iter: int = 500
    variance_mode: str = "unknown"
    sigma2_fixed: float | None = None
    sigma2_init: float | None = None
    randomize_order: bool = False

    def __post_init__(self):
        ladder = tuple(float(v) for v in self.lambda0_ladder)
        object.__setattr__(self, "lambda0_ladder", ladder)
        if not ladder:
            raise DomainError("lambda0_ladder must be nonempty")
        if self.lambda1 <= 0 or ladder[0] < self.lambda1:
            raise DomainError("need 0 < lambda1 <= lambda0_ladder[0]")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise DomainError("lambda0_ladder must be strictly increasing")
        if self.a <= 0 or (self.b is not None and self.b <= 0):
            raise DomainError("a and b must be positive")
        if self.update_frequency_m < 1:
            raise DomainError("update_frequency_m must be a positive integer")
        if self.tol_eps <= 0:
            raise DomainError("tol_eps must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be a positive integer")
        if self.variance_mode not in VARIANCE_MODES:
            raise DomainError(f"variance_mode must be one of {VARIANCE_MODES}")
        if self.variance_mode == "fixed":
            if self.sigma2_fixed is None or self.sigma2_fixed <= 0:
                raise DomainError("fixed variance mode needs a positive sigma2_fixed")
        if self.sigma2_init is not None and self.sigma2_init <= 0:
            raise DomainError("sigma2_init must be positive when given")


@dataclass(frozen=True)
class PenaltyState:
    """Frozen snapshot of the quantities driving one coordinate pass."""

    theta: float
    sigma2: float
    slab_prob_zero: float
    penalty_rate_zero: float
    threshold: float
    discriminant_zero: float
    scaled: bool = False

    @classmethod
    def from_params(
        cls,
        theta: float,
        sigma2: float,
        n: int,
        lambda0: float,
        lambda1: float,
        scaled: bool = False,
    ) -> "PenaltyState":
        w = math.sqrt(sigma2) if scaled else sigma2
        return cls(
            theta=theta,
            sigma2=sigma2,
            slab_prob_zero=slab_probability(0.0, theta, lambda0, lambda1),
            penalty_rate_zero=penalty_rate(0.0, theta, lambda0, lambda1),
            threshold=selection_threshold(theta, w, n, lambda0, lambda1),
            discriminant_zero=threshold_discriminant(0.0, theta, w, n, lambda0, lambda1),
            scaled=scaled,
        )


@dataclass(frozen=True)
class LadderRecord:
    lambda0: float
    iterations: int
    nnz: int
    sigma2: float
    converged: bool


@dataclass(frozen=True)
class SslFit:
    """Solver output.

    ``sigma2_hat`` is the last Newton-step value (the fixed value in
    fixed mode); ``sigma2_adj`` applies the n - nnz degrees-of-freedom
    correction to the final residual sum of squares.
    ``restart_lambda0`` records the rung after which the exploration
    state was discarded (None if the ladder never stabilized).
    """

    coef: Coefficients
    sigma2_hat: float
    sigma2_adj: float
    theta_hat: float
    ladder_trace: tuple
    elapsed_seconds: float
    variance_mode: str
    restart_lambda0: float | None = None


@dataclass(frozen=True)
class KktReport:
    """Stationarity and exclusion residuals of a fitted state."""

    max_stationarity_residual: float
    max_exclusion_excess: float
    threshold: float

    def satisfied(self, tol: float = 1e-6) -> bool:
        return self.max_stationarity_residual <= tol and self.max_exclusion_excess <= tol


def sigma2_newton(rss: float, n: int, mode: str, sigma2_fixed: float | None = None) -> float:
    """One variance update from the residual sum of squares."""
    if rss < 0 or n < 3:
        raise DomainError("need rss >= 0 and n >= 3")
    if mode == "unknown":
        return rss / (n + 2)
    if mode == "scaled":
        return rss / n
    if mode == "fixed":
        if sigma2_fixed is None:
            raise DomainError("fixed mode needs sigma2_fixed")
        return sigma2_fixed
    raise DomainError(f"unknown variance mode {mode!r}")


def sigma2_adjusted(rss: float, n: int, nnz: int) -> float:
    """Degrees-of-freedom corrected variance estimate rss/(n - nnz)."""
    if nnz >= n:
        raise DegenerateFitError(f"{nnz} nonzero coefficients with only {n} observations")
    return rss / (n - nnz)


_CHI2_3_LOWER_DECILE = float(chi2.ppf(0.1, df=3))


def init_sigma2(y: np.ndarray) -> float:
    """Conservative starting value for the noise variance.

    Mode of a scaled-inverse-chi-squared with 3 degrees of freedom whose
    90th percentile equals the sample variance of y, i.e.
    ``var(y) * q / (nu + 2)`` with q the lower 0.10 quantile of a
    chi-squared with 3 degrees of freedom.  Linear in ``var(y)``.
    """
    y = np.asarray(y, dtype=np.float64)
    v = float(y.var(ddof=1))
    if v <= 0:
        raise DomainError("response has zero variance")
    return v * _CHI2_3_LOWER_DECILE / 5.0


@njit(cache=True)
def _ssl_pass(
    xt,
    r,
    beta,
    order,
    n,
    m,
    a,
    b,
    theta,
    sigma2,
    scaled,
    lambda0,
    lambda1,
    update_sigma,
    newton_div,
    ss_floor,
    sigma2_floor,
):
    """One full pass over the coordinates in blocks of m.

    Mutates ``r`` and ``beta`` in place; returns the updated mixing
    weight, variance, active count, and a degeneracy flag.
    """
    p = beta.shape[0]
    q = 0
    for j in range(p):
        if beta[j] != 0.0:
            q += 1
    degenerate = False
    nblocks = (p + m - 1) // m
    for s in range(nblocks):
        w = math.sqrt(sigma2) if scaled else sigma2
        delta = _threshold(theta, w, n, lambda0, lambda1)
        hi = min((s + 1) * m, p)
        for idx in range(s * m, hi):
            j = order[idx]
            bj = beta[j]
            xj = xt[j]
            zj = np.dot(xj, r) + n * bj
            lam = w * _penalty_rate(bj, theta, lambda0, lambda1)
            bn = _gen_threshold(zj, lam, delta, n)
            if bn != bj:
                d = bj - bn
                for i in range(n):
                    r[i] += xj[i] * d
                if bj == 0.0:
                    q += 1
                elif bn == 0.0:
                    q -= 1
                beta[j] = bn
        theta = (a + q) / (a + b + p)
        if update_sigma:
            ss = np.dot(r, r)
            if ss < ss_floor:
                sigma2 = sigma2_floor
                degenerate = True
            else:
                sigma2 = ss / newton_div
    return theta, sigma2, q, degenerate


@njit(cache=True)
def _revive_zero_coordinates(xt, r, beta, n, theta, w, lambda0, lambda1, delta):
    """Move zero coordinates whose score exceeds the threshold to the
    nonzero root of the one-dimensional subproblem.

    The blockwise update cannot leave the origin when the score lies
    between the threshold and w * rate(0), although the global-mode
    characterization prescribes a nonzero value there.  Solves the
    fixed point by iteration from the slab end and accepts it only if
    it lowers the one-dimensional objective.  Returns how many
    coordinates moved.
    """
    p = beta.shape[0]
    revived = 0
    for j in range(p):
        if beta[j] != 0.0:
            continue
        xj = xt[j]
        zj = np.dot(xj, r)
        az = abs(zj)
        if az <= delta:
            continue
        t = (az - w * lambda1) / n
        if t <= 0.0:
            continue
        for _ in range(200):
            t_new = (az - w * _penalty_rate(t, theta, lambda0, lambda1)) / n
            if t_new <= 0.0:
                t = 0.0
                break
            if abs(t_new - t) <= 1e-14 * max(1.0, t):
                t = t_new
                break
            t = t_new
        if t <= 0.0:
            continue
        # accept only if the 1-d objective n t^2/2 - |z| t - w pen(t)
        # drops below its value at zero
        ratio = (lambda0 / lambda1) * ((1.0 - theta) / theta)
        log_p0 = -math.log1p(ratio)
        log_pt = -math.log1p(ratio * math.exp(-t * (lambda0 - lambda1)))
        pen_t = -lambda1 * t + log_p0 - log_pt
        f_t = 0.5 * n * t * t - az * t - w * pen_t
        if f_t < 0.0:
            bn = math.copysign(t, zj)
            d = -bn
            for i in range(n):
                r[i] += xj[i] * d
            beta[j] = bn
            revived += 1
    return revived


def _as_solver_arrays(dataset: Dataset):
    if not dataset.standardized:
        raise NotStandardizedError("solver requires a standardized dataset")
    xt = np.ascontiguousarray(dataset.x.T)
    y = np.ascontiguousarray(dataset.y)
    return xt, y


def coordinate_sweep(
    dataset: Dataset,
    beta: Coefficients,
    state: PenaltyState,
    config: SslConfig,
    lambda0: float | None = None,
) -> Coefficients:
    """One deterministic pass over all coordinates under a frozen state.

    Coordinates are visited in index order; the score of each uses a
    running residual that is updated incrementally as coefficients move.
    """
    xt, y = _as_solver_arrays(dataset)
    if beta.beta.shape[0] != dataset.p:
        raise DimensionMismatchError("beta length does not match design")
    if lambda0 is None:
        lambda0 = config.lambda0_ladder[-1]
    n, p = dataset.n, dataset.p
    bvec = beta.beta.copy()
    r = np.ascontiguousarray(y - dataset.x @ bvec)
    order = np.arange(p, dtype=np.int64)
    b_prior = config.b if config.b is not None else float(p)
    # frozen state: block size p and no refresh, so theta, sigma2, and
    # the threshold stay fixed across the whole pass
    _ssl_pass(
        xt,
        r,
        bvec,
        order,
        n,
        p,
        config.a,
        b_prior,
        state.theta,
        state.sigma2,
        state.scaled,
        lambda0,
        config.lambda1,
        False,
        n + 2,
        -1.0,
        state.sigma2,
    )
    return Coefficients.from_beta(bvec)


def fit_ssl(dataset: Dataset, config: SslConfig, rng: RngSpec | None = None) -> SslFit:
    """Run the full ladder and return the fitted model.

    Raises :class:`DidNotConvergeError` (with the partial fit attached)
    if the final rung fails to converge, and :class:`DegenerateFitError`
    if the final active set is as large as the sample.
    """
    t_start = time.perf_counter()
    xt, y = _as_solver_arrays(dataset)
    n, p = dataset.n, dataset.p
    mode = config.variance_mode
    scaled = mode == "scaled"
    b_prior = config.b if config.b is not None else float(p)

    if mode == "fixed":
        sigma2_start = float(config.sigma2_fixed)
    elif config.sigma2_init is not None:
        sigma2_start = float(config.sigma2_init)
    else:
        sigma2_start = init_sigma2(y)

    y_norm2 = float(y @ y)
    ss_floor = 1e-12 * y_norm2
    sigma2_floor = 1e-8 * float(np.var(y, ddof=1)) if n > 1 else 1e-8
    newton_div = n if scaled else n + 2

    beta = np.zeros(p)
    beta_prev = np.empty(p)
    r = y.copy()
    theta = 0.5
    sigma2 = sigma2_start
    k_prev = _K_INF
    order = np.arange(p, dtype=np.int64)
    gen = rng.generator() if (rng is not None and config.randomize_order) else None

    trace = []
    update_sigma = False
    degenerate = False
    restarted = False
    restart_lambda0 = None
    ladder_len = len(config.lambda0_ladder)
    for l, lambda0 in enumerate(config.lambda0_ladder):
        update_sigma = mode != "fixed" and restarted and k_prev < 100
        k_l = 0
        diff = math.inf
        degenerate = False
        while diff > config.tol_eps and k_l < config.max_iter:
            k_l += 1
            if gen is not None:
                order = gen.permutation(p).astype(np.int64)
            beta_prev[:] = beta
            theta, sigma2, q, degen = _ssl_pass(
                xt, r, beta, order, n, config.update_frequency_m, config.a, b_prior,
                theta, sigma2, scaled, lambda0, config.lambda1,
                update_sigma, newton_div, ss_floor, sigma2_floor,
            )
            degenerate = degenerate or degen
            diff = float(np.linalg.norm(beta - beta_prev))
        converged = diff <= config.tol_eps and not degenerate
        r = np.ascontiguousarray(y - dataset.x @ beta)
        trace.append(LadderRecord(float(lambda0), k_l, int(np.count_nonzero(beta)), sigma2, converged))
        if degenerate:
            # a live rung interpolated the data; freeze the variance at
            # its initial value and let a later stable rung restart
            sigma2 = sigma2_start
            k_prev = _K_INF
            restarted = False
            continue
        k_prev = k_l
        if not restarted and converged and k_l < 100 and l < ladder_len - 1:
            # ladder reached stable territory: discard the overfitted
            # exploration state and refit the next rung from scratch at
            # the frozen variance; updates go live once it converges
            beta[:] = 0.0
            r = y.copy()
            theta = 0.5
            sigma2 = sigma2_start
            restarted = True
            restart_lambda0 = float(lambda0)
            k_prev = _K_INF

    # polish the final rung to a coordinate fixed point so the
    # stationarity certificate holds well below 1e-6, reviving any zero
    # coordinate whose score ended up above the selection threshold
    lambda0 = config.lambda0_ladder[-1]
    update_sigma = update_sigma and not degenerate
    for _round in range(8):
        diff = math.inf
        extra = 0
        while diff > 1e-11 and extra < 500:
            extra += 1
            beta_prev[:] = beta
            theta, sigma2, q, degen = _ssl_pass(
                xt, r, beta, order, n, config.update_frequency_m, config.a, b_prior,
                theta, sigma2, scaled, lambda0, config.lambda1,
                update_sigma, newton_div, ss_floor, sigma2_floor,
            )
            diff = float(np.linalg.norm(beta - beta_prev))
            if degen:
                break
        w = math.sqrt(sigma2) if scaled else sigma2
        delta = selection_threshold(theta, w, n, lambda0, config.lambda1)
        r = np.ascontiguousarray(y - dataset.x @ beta)
        revived = _revive_zero_coordinates(
            xt, r, beta, n, theta, w, lambda0, config.lambda1, delta
        )
        if revived == 0:
            break

    coef = Coefficients.from_beta(beta)
    rss = float(r @ r)
    if coef.nnz < n:
        s2_adj = rss / (n - coef.nnz)
    else:
        s2_adj = math.inf
    fit = SslFit(
        coef=coef,
        sigma2_hat=float(sigma2),
        sigma2_adj=float(s2_adj),
        theta_hat=float(theta),
        ladder_trace=tuple(trace),
        elapsed_seconds=time.perf_counter() - t_start,
        variance_mode=mode,
        restart_lambda0=restart_lambda0,
    )
    if not trace[-1].converged:
        raise DidNotConvergeError(
            f"final rung (lambda0={lambda0}) did not converge in {config.max_iter} iterations",
            fit=fit,
        )
    if coef.nnz >= n:
        raise DegenerateFitError(
            f"final active set has {coef.nnz} coefficients with only {n} observations"
        )
    return fit


def kkt_certificate(dataset: Dataset, fit: SslFit, config: SslConfig) -> KktReport:
    """Verify the fitted state against the coordinate optimality conditions.

    The stationarity residual compares each coefficient against the
    soft-threshold prescription at its own score; the exclusion excess
    measures how far any zero coordinate's score sits above the
    selection threshold (both 0 at an exact fixed point).
    """
    beta = fit.coef.beta
    lambda0 = config.lambda0_ladder[-1]
    scaled = fit.variance_mode == "scaled"
    w = math.sqrt(fit.sigma2_hat) if scaled else fit.sigma2_hat
    r = dataset.y - dataset.x @ beta
    z = dataset.x.T @ r + dataset.n * beta
    _, rates = penalty_rate_vector(beta, fit.theta_hat, lambda0, config.lambda1)
    prescribed = np.sign(z) * np.maximum(np.abs(z) - w * rates, 0.0) / dataset.n
    nonzero = beta != 0.0
    stationarity = float(np.abs(beta[nonzero] - prescribed[nonzero]).max()) if nonzero.any() else 0.0
    # zero coordinates must obey the plain prescription as well
    if (~nonzero).any():
        stationarity = max(stationarity, float(np.abs(prescribed[~nonzero]).max()))
    delta = selection_threshold(fit.theta_hat, w, dataset.n, lambda0, config.lambda1)
    excess = float(np.maximum(np.abs(z[~nonzero]) - delta, 0.0).max()) if (~nonzero).any() else 0.0
    return KktReport(
        max_stationarity_residual=stationarity,
        max_exclusion_excess=excess,
        threshold=delta,
    )
