"""Simulation benchmark: data generation, selection metrics, replication
runner, cross-validation harness, and the ridge variance study.

Replication r of a benchmark draws its data from stream r of the
scenario seed and hands each method its own derived stream, so serial
and parallel runs produce identical reports.  Per-fit wall time is
recorded only when requested; by default the runtime column is zero so
reports stay byte-for-byte reproducible.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import multiprocessing as mp

import numpy as np

from .baselines import lasso_cd, scaled_lasso, universal_lambda0
from .conjugate import ConjEmConfig, run_conj_em
from .data import Coefficients, Dataset, destandardize_coefficients, residual_ss, standardize
from .errors import DimensionMismatchError, DomainError, SpikeslabError
from .ridge import conjugate_ridge, gibbs_independent_ridge, least_squares, zellner
from .rng import RngSpec
from .solver import SslConfig, fit_ssl
from .errors import DidNotConvergeError

__all__ = [
    "SimScenario",
    "SelectionMetrics",
    "BenchReport",
    "generate_design",
    "generate_response",
    "compute_metrics",
    "run_replications",
    "kfold_cv",
    "ridge_variance_study",
    "method_names",
    "METRIC_COLUMNS",
]

# derived-stream offsets within one replication's stream
_RESPONSE_OFFSET = 2**39
_METHOD_OFFSET = 2**40
_FOLD_OFFSET = 2**41


@dataclass(frozen=True)
class SimScenario:
    """Generative description of one benchmark experiment.

    The design rows are i.i.d. Gaussian with a block-diagonal
    equicorrelation covariance: unit variances, correlation ``rho``
    inside each block of ``block_size`` consecutive columns, zero across
    blocks.
    """

    n: int
    p: int
    block_size: int
    rho: float
    nonzero_values: tuple
    nonzero_positions: tuple
    sigma2_true: float
    seed: RngSpec

    def __post_init__(self):
        if self.n < 3 or self.p < 1:
            raise DomainError("need n >= 3 and p >= 1")
        if self.block_size < 1 or self.p % self.block_size != 0:
            raise DomainError("block_size must divide p")
        if not (0.0 <= self.rho < 1.0):
            raise DomainError("rho must lie in [0, 1)")
        pos = tuple(int(j) for j in self.nonzero_positions)
        vals = tuple(float(v) for v in self.nonzero_values)
        if len(pos) != len(vals):
            raise DomainError("positions and values must align")
        if len(set(pos)) != len(pos):
            raise DomainError("positions must be distinct")
        if pos and (min(pos) < 0 or max(pos) >= self.p):
            raise DomainError("positions out of range")
        if self.sigma2_true <= 0:
            raise DomainError("sigma2_true must be positive")
        object.__setattr__(self, "nonzero_positions", pos)
        object.__setattr__(self, "nonzero_values", vals)

    @classmethod
    def default(cls, seed: RngSpec = RngSpec(0)) -> "SimScenario":
        """Benchmark default: 20 blocks of 50 highly correlated predictors,
        six staggered signals, noise variance 3."""
        return cls(
            n=100,
            p=1000,
            block_size=50,
            rho=0.9,
            nonzero_values=(-2.5, -2.0, -1.5, 1.5, 2.0, 2.5),
            nonzero_positions=(0, 50, 100, 150, 200, 250),
            sigma2_true=3.0,
            seed=seed,
        )

    def beta0(self) -> np.ndarray:
        beta = np.zeros(self.p)
        for j, v in zip(self.nonzero_positions, self.nonzero_values):
            beta[j] = v
        return beta

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "block_size": self.block_size,
            "rho": self.rho,
            "nonzero_values": list(self.nonzero_values),
            "nonzero_positions": list(self.nonzero_positions),
            "sigma2_true": self.sigma2_true,
            "seed": self.seed.seed,
            "stream_id": self.seed.stream_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimScenario":
        base = cls.default()
        return cls(
            n=int(d.get("n", base.n)),
            p=int(d.get("p", base.p)),
            block_size=int(d.get("block_size", base.block_size)),
            rho=float(d.get("rho", base.rho)),
            nonzero_values=tuple(d.get("nonzero_values", base.nonzero_values)),
            nonzero_positions=tuple(d.get("nonzero_positions", base.nonzero_positions)),
            sigma2_true=float(d.get("sigma2_true", base.sigma2_true)),
            seed=RngSpec(int(d.get("seed", 0)), int(d.get("stream_id", 0))),
        )


def generate_design(scenario: SimScenario, rng: RngSpec) -> np.ndarray:
    """Draw the design matrix: exact equicorrelated Gaussian blocks.

    Each block is built from one shared factor plus independent noise,
    which reproduces the target covariance exactly.
    """
    gen = rng.generator()
    n, bs = scenario.n, scenario.block_size
    rho = scenario.rho
    blocks = []
    for _ in range(scenario.p // bs):
        shared = gen.standard_normal(n)
        idio = gen.standard_normal((n, bs))
        blocks.append(math.sqrt(rho) * shared[:, None] + math.sqrt(1.0 - rho) * idio)
    return np.hstack(blocks)


def generate_response(
    x: np.ndarray, beta0: np.ndarray, sigma2: float, rng: RngSpec
) -> np.ndarray:
    """Draw y = x beta0 + e with i.i.d. Gaussian noise of variance sigma2."""
    x = np.asarray(x, dtype=np.float64)
    beta0 = np.asarray(beta0, dtype=np.float64)
    if x.shape[1] != beta0.shape[0]:
        raise DimensionMismatchError("beta0 length does not match design")
    if sigma2 < 0:
        raise DomainError("sigma2 must be nonnegative")
    gen = rng.generator()
    return x @ beta0 + math.sqrt(sigma2) * gen.standard_normal(x.shape[0])


@dataclass(frozen=True)
class SelectionMetrics:
    ham: int
    pe: float
    tp: int
    fp: int
    fn: int
    tn: int
    mcc: float
    nnz: int
    correct_model: bool
    sigma2_estimate: float
    runtime_seconds: float


METRIC_COLUMNS = (
    "ham",
    "pe",
    "tp",
    "fp",
    "fn",
    "tn",
    "mcc",
    "nnz",
    "correct_model",
    "sigma2_estimate",
    "runtime_seconds",
)


def compute_metrics(
    beta_hat: np.ndarray,
    beta0: np.ndarray,
    x: np.ndarray,
    sigma2_estimate: float,
    runtime: float = 0.0,
) -> SelectionMetrics:
    """Confusion counts, Hamming distance, prediction error, and MCC.

    The MCC is defined as 0 whenever its denominator vanishes.
    """
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    beta0 = np.asarray(beta0, dtype=np.float64)
    if beta_hat.shape != beta0.shape or x.shape[1] != beta0.shape[0]:
        raise DimensionMismatchError("beta_hat, beta0, and x must agree")
    est = beta_hat != 0.0
    tru = beta0 != 0.0
    tp = int(np.sum(est & tru))
    fp = int(np.sum(est & ~tru))
    fn = int(np.sum(~est & tru))
    tn = int(np.sum(~est & ~tru))
    denom = math.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    mcc = ((tp * tn) - (fp * fn)) / denom if denom > 0 else 0.0
    diff = x @ (beta0 - beta_hat)
    return SelectionMetrics(
        ham=fp + fn,
        pe=float(diff @ diff),
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        mcc=float(mcc),
        nnz=int(np.sum(est)),
        correct_model=bool(np.array_equal(est, tru)),
        sigma2_estimate=float(sigma2_estimate),
        runtime_seconds=float(runtime),
    )


def _df_corrected_sigma2(dataset: Dataset, coef: Coefficients) -> float:
    rss = residual_ss(dataset, coef)
    if coef.nnz >= dataset.n:
        return math.inf
    return rss / (dataset.n - coef.nnz)


def _benchmark_ladder(hi: int = 100) -> tuple:
    return tuple(float(v) for v in range(1, hi + 1))


def _fit_ssl_mode(ds: Dataset, rng: RngSpec, mode: str, sigma2_fixed=None):
    config = SslConfig(
        lambda0_ladder=_benchmark_ladder(),
        lambda1=1.0,
        a=1.0,
        b=float(ds.p),
        variance_mode=mode,
        sigma2_fixed=sigma2_fixed,
    )
    try:
        fit = fit_ssl(ds, config, rng)
    except DidNotConvergeError as exc:
        if exc.fit is None:
            raise
        fit = exc.fit
    return fit.coef, fit.sigma2_adj


def _method_ssl_unknown(ds, rng):
    return _fit_ssl_mode(ds, rng, "unknown")


def _method_scaled_ssl(ds, rng):
    return _fit_ssl_mode(ds, rng, "scaled")


def _method_scaled_lasso(ds, rng):
    lam0 = universal_lambda0(ds.n, ds.p)
    fit = scaled_lasso(ds, lam0)
    return fit.beta, _df_corrected_sigma2(ds, fit.beta)


def _cv_fold_indices(n: int, k: int, rng: RngSpec):
    perm = rng.generator().permutation(n)
    return np.array_split(perm, k)


def _method_lasso_cv(ds, rng, n_folds: int = 10, n_lambda: int = 100, ratio: float = 0.01):
    lam_max = float(np.abs(ds.x.T @ ds.y).max())
    grid = np.geomspace(lam_max, ratio * lam_max, n_lambda)
    folds = _cv_fold_indices(ds.n, n_folds, rng)
    cv_err = np.zeros(n_lambda)
    for fold in folds:
        mask = np.ones(ds.n, dtype=bool)
        mask[fold] = False
        train = standardize(Dataset.from_arrays(ds.x[mask], ds.y[mask]))
        beta = np.zeros(ds.p)
        for i, lam in enumerate(grid):
            beta = lasso_cd(train, lam, tol=1e-6, beta0=beta).beta
            b_raw, intercept = destandardize_coefficients(
                Coefficients.from_beta(beta), train
            )
            resid = ds.y[fold] - (ds.x[fold] @ b_raw + intercept)
            cv_err[i] += float(resid @ resid)
    best = int(np.argmin(cv_err))
    coef = lasso_cd(ds, float(grid[best]), tol=1e-8)
    return coef, _df_corrected_sigma2(ds, coef)


def _method_conj_em(ds, rng, lambda0: float = 20.0):
    config = ConjEmConfig(lambda0=lambda0, lambda1=1.0, a=1.0, b=float(ds.p))
    try:
        fit = run_conj_em(ds, config)
    except DidNotConvergeError as exc:
        if exc.fit is None:
            raise
        fit = exc.fit
    return fit.beta, fit.sigma_hat**2


_REGISTRY = {
    "ssl-unknown": lambda ds, rng, args: _method_ssl_unknown(ds, rng),
    "ssl-fixed": lambda ds, rng, args: _fit_ssl_mode(
        ds, rng, "fixed", sigma2_fixed=float(args[0]) if args else 1.0
    ),
    "scaled-ssl": lambda ds, rng, args: _method_scaled_ssl(ds, rng),
    "scaled-lasso": lambda ds, rng, args: _method_scaled_lasso(ds, rng),
    "lasso-cv": lambda ds, rng, args: _method_lasso_cv(ds, rng),
    "conj-em": lambda ds, rng, args: _method_conj_em(
        ds, rng, lambda0=float(args[0]) if args else 20.0
    ),
}


def method_names() -> tuple:
    return tuple(sorted(_REGISTRY))


def _parse_method(spec: str):
    parts = spec.split(":")
    name, args = parts[0], parts[1:]
    if name not in _REGISTRY:
        raise DomainError(f"unknown method {name!r}; known: {', '.join(method_names())}")
    return name, args


def _run_method(spec: str, ds: Dataset, rng: RngSpec):
    name, args = _parse_method(spec)
    return _REGISTRY[name](ds, rng, args)


def _replication_rows(scenario: SimScenario, methods, rep: int, timing: bool):
    data_rng = scenario.seed.stream(rep)
    x = generate_design(scenario, data_rng)
    beta0 = scenario.beta0()
    y = generate_response(x, beta0, scenario.sigma2_true, data_rng.stream(_RESPONSE_OFFSET))
    raw = Dataset.from_arrays(x, y)
    ds = standardize(raw)
    rows = []
    for mi, spec in enumerate(methods):
        method_rng = data_rng.stream(_METHOD_OFFSET + mi)
        t0 = time.perf_counter()
        try:
            coef, sigma2_est = _run_method(spec, ds, method_rng)
        except SpikeslabError as exc:
            rows.append((spec, rep, None, f"{type(exc).__name__}: {exc}"))
            continue
        elapsed = time.perf_counter() - t0 if timing else 0.0
        beta_raw, _intercept = destandardize_coefficients(coef, ds)
        metrics = compute_metrics(beta_raw, beta0, x, sigma2_est, elapsed)
        rows.append((spec, rep, metrics, None))
    return rows


@dataclass(frozen=True)
class BenchReport:
    """Per-replication metrics plus aggregate rows for each method."""

    scenario: SimScenario
    methods: tuple
    r_reps: int
    rows: tuple  # (method, rep, SelectionMetrics | None, error | None), rep-major

    def metrics_for(self, method: str) -> list:
        return [m for (spec, _rep, m, _err) in self.rows if spec == method and m is not None]

    def failures_for(self, method: str) -> int:
        return sum(1 for (spec, _r, m, _e) in self.rows if spec == method and m is None)

    def metric_values(self, method: str, column: str) -> np.ndarray:
        vals = [getattr(m, column) for m in self.metrics_for(method)]
        return np.asarray(vals, dtype=np.float64)

    def summary(self) -> dict:
        out = {}
        for method in self.methods:
            cols = {}
            for col in METRIC_COLUMNS:
                vals = self.metric_values(method, col)
                if vals.size == 0:
                    cols[col] = {"mean": math.nan, "median": math.nan, "se": math.nan}
                    continue
                se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
                cols[col] = {
                    "mean": float(vals.mean()),
                    "median": float(np.median(vals)),
                    "se": se,
                }
            out[method] = {"columns": cols, "failures": self.failures_for(method)}
        return out

    def to_json_dict(self) -> dict:
        rows = []
        for spec, rep, m, err in self.rows:
            entry = {"method": spec, "replication": rep}
            if m is None:
                entry["error"] = err
            else:
                entry.update({c: getattr(m, c) for c in METRIC_COLUMNS})
            rows.append(entry)
        return {
            "scenario": self.scenario.to_dict(),
            "methods": list(self.methods),
            "replications": self.r_reps,
            "rows": rows,
            "summary": self.summary(),
        }

    def to_csv(self, path):
        def fmt(v):
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, float):
                return repr(v)
            return str(v)

        with open(path, "w", encoding="utf-8") as fh:
            fh.write("method,replication," + ",".join(METRIC_COLUMNS) + ",error\n")
            for spec, rep, m, err in self.rows:
                if m is None:
                    cells = [""] * len(METRIC_COLUMNS) + [err or "failed"]
                else:
                    cells = [fmt(getattr(m, c)) for c in METRIC_COLUMNS] + [""]
                fh.write(f"{spec},{rep}," + ",".join(cells) + "\n")
            fh.write("summary,stat," + ",".join(METRIC_COLUMNS) + ",failures\n")
            summ = self.summary()
            for method in self.methods:
                cols = summ[method]["columns"]
                for stat in ("mean", "median", "se"):
                    cells = [repr(cols[c][stat]) for c in METRIC_COLUMNS]
                    fh.write(
                        f"{method},{stat}," + ",".join(cells) + f",{summ[method]['failures']}\n"
                    )


def _star_args(args):
    return _replication_rows(*args)


def run_replications(
    scenario: SimScenario,
    methods,
    r_reps: int,
    parallelism: int = 1,
    timing: bool = False,
) -> BenchReport:
    """Run every method on ``r_reps`` independently generated datasets.

    Replication r draws from stream r of the scenario seed.  Per-fit
    errors become failure rows instead of aborting the run.  The report
    is identical for serial and parallel execution.
    """
    if r_reps < 2:
        raise DomainError("need at least 2 replications")
    methods = tuple(methods)
    for spec in methods:
        _parse_method(spec)
    if parallelism > 1:
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=parallelism, mp_context=ctx) as pool:
            chunks = list(
                pool.map(
                    _star_args,
                    [(scenario, methods, rep, timing) for rep in range(r_reps)],
                )
            )
    else:
        chunks = [_replication_rows(scenario, methods, rep, timing) for rep in range(r_reps)]
    rows = tuple(row for chunk in chunks for row in chunk)
    return BenchReport(scenario=scenario, methods=methods, r_reps=r_reps, rows=rows)


def _predictor_from_method(method):
    """Adapt a registry name or callable into raw-scale fit-and-predict."""
    if callable(method):
        return method

    name, args = _parse_method(method) if method not in ("least-squares", "training-mean") else (method, [])

    def fit(train_raw: Dataset, rng: RngSpec):
        if name == "training-mean":
            return np.zeros(train_raw.p), float(train_raw.y.mean())
        ds = standardize(train_raw)
        if name == "least-squares":
            xtx = ds.x.T @ ds.x
            beta = np.linalg.solve(xtx, ds.x.T @ ds.y)
            coef = Coefficients.from_beta(beta)
        else:
            coef, _sigma2 = _REGISTRY[name](ds, rng, args)
        return destandardize_coefficients(coef, ds)

    return fit


def kfold_cv(dataset: Dataset, method, k: int, rng: RngSpec) -> float:
    """Seeded k-fold cross-validation error of a fit method.

    Folds are a random near-equal partition; each fold's fit sees only
    the training rows (and standardizes them itself).  Returns
    ``(1/k) * sum_k sum_{i in fold k} (y_i - prediction_i)^2``.
    """
    if k < 2 or dataset.n < k:
        raise DomainError("need 2 <= k <= n")
    fit = _predictor_from_method(method)
    folds = _cv_fold_indices(dataset.n, k, rng)
    total = 0.0
    for fi, fold in enumerate(folds):
        mask = np.ones(dataset.n, dtype=bool)
        mask[fold] = False
        train = Dataset.from_arrays(dataset.x[mask], dataset.y[mask])
        beta_raw, intercept = fit(train, rng.stream(_FOLD_OFFSET + fi))
        resid = dataset.y[fold] - (dataset.x[fold] @ beta_raw + intercept)
        total += float(resid @ resid)
    return total / k


def ridge_variance_study(
    r_reps: int,
    rng: RngSpec,
    n: int = 100,
    p: int = 90,
    nonzero_values: tuple = (-2.5, -2.0, -1.5, 1.5, 2.0, 2.5),
    sigma2_true: float = 3.0,
    tau2: float = 100.0,
    gibbs_iterations: int = 5000,
    gibbs_burn_in: int = 1000,
) -> dict:
    """Variance estimates of the four ridge-family estimators over replications.

    Independent standard-normal design, sparse truth in the leading
    coordinates.  Returns one array of sigma2 estimates per estimator.
    """
    beta0 = np.zeros(p)
    beta0[: len(nonzero_values)] = nonzero_values
    out = {
        "least_squares": np.empty(r_reps),
        "conjugate_ridge": np.empty(r_reps),
        "zellner": np.empty(r_reps),
        "independent_gibbs": np.empty(r_reps),
    }
    for rep in range(r_reps):
        data_rng = rng.stream(rep)
        gen = data_rng.generator()
        x = gen.standard_normal((n, p))
        y = x @ beta0 + math.sqrt(sigma2_true) * gen.standard_normal(n)
        ds = Dataset.from_arrays(x, y)
        out["least_squares"][rep] = least_squares(ds).sigma2_estimate
        out["conjugate_ridge"][rep] = conjugate_ridge(ds, tau2).sigma2_estimate
        out["zellner"][rep] = zellner(ds, tau2).sigma2_estimate
        chain = gibbs_independent_ridge(
            ds,
            tau2,
            iterations=gibbs_iterations,
            burn_in=gibbs_burn_in,
            rng=data_rng.stream(_METHOD_OFFSET),
        )
        out["independent_gibbs"][rep] = chain.posterior_mean_sigma2()
    return out
