"""Command-line interface.

Subcommands: ``fit`` (single model on CSV data), ``simulate`` (seeded
replication benchmark with CSV/JSON reports and figures), ``cv``
(k-fold cross-validation error), and ``check-theory`` (numerical
proposition checks).

Exit codes: 0 success, 1 input error, 2 non-convergence or failed
checks (partial output is still written where possible).  The seed
falls back to the SSLAB_SEED environment variable when --seed is not
given.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import lasso_cd, scaled_lasso, universal_lambda0
from .bench import SimScenario, kfold_cv, method_names, run_replications
from .conjugate import ConjEmConfig, run_conj_em
from .data import (
    Coefficients,
    Dataset,
    destandardize_coefficients,
    load_design_csv,
    load_response_csv,
    residual_ss,
    standardize,
)
from .errors import DidNotConvergeError, SpikeslabError
from .ridge import conjugate_ridge, gibbs_independent_ridge, least_squares, zellner
from .rng import RngSpec
from .solver import SslConfig, fit_ssl
from .theory import run_theory_suite

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2


def _resolve_seed(value):
    if value is not None:
        return int(value)
    env = os.environ.get("SSLAB_SEED")
    return int(env) if env else 0


def _parse_ladder(spec):
    if isinstance(spec, (list, tuple)):
        return tuple(float(v) for v in spec)
    if isinstance(spec, str):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"ladder string must be start:end:step, got {spec!r}")
        start, end, step = (float(v) for v in parts)
        if step <= 0:
            raise ValueError("ladder step must be positive")
        count = int(math.floor((end - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(count))
    raise ValueError("lambda0_ladder must be a list or a start:end:step string")


def _ssl_config_from_dict(cfg, p):
    return SslConfig(
        lambda0_ladder=_parse_ladder(cfg.get("lambda0_ladder", "1:100:1")),
        lambda1=float(cfg.get("lambda1", 1.0)),
        a=float(cfg.get("a", 1.0)),
        b=float(cfg["b"]) if "b" in cfg and cfg["b"] is not None else float(p),
        update_frequency_m=int(cfg.get("update_frequency_m", 10)),
        tol_eps=float(cfg.get("tol_eps", 1e-3)),
        max_iter=int(cfg.get("max_iter", 500)),
        variance_mode=cfg.get("variance_mode", "unknown"),
        sigma2_fixed=cfg.get("sigma2_fixed"),
        sigma2_init=cfg.get("sigma2_init"),
        randomize_order=bool(cfg.get("randomize_order", False)),
    )


def _sparse_coding(beta):
    idx = np.flatnonzero(beta)
    return {
        "index": [int(i) for i in idx],
        "value": [float(beta[i]) for i in idx],
    }


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fit_payload_common(algorithm, ds_std, coef):
    beta_raw, intercept = destandardize_coefficients(coef, ds_std)
    return {
        "algorithm": algorithm,
        "n": ds_std.n,
        "p": ds_std.p,
        "coefficients": _sparse_coding(beta_raw),
        "intercept": intercept,
        "nnz": coef.nnz,
    }


def _trace_rows(fit):
    return [
        {
            "lambda0": rec.lambda0,
            "iterations": rec.iterations,
            "nnz": rec.nnz,
            "sigma2": rec.sigma2,
            "converged": rec.converged,
        }
        for rec in fit.ladder_trace
    ]


def cmd_fit(args) -> int:
    try:
        x = load_design_csv(args.x)
        y = load_response_csv(args.y)
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError, SpikeslabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    algorithm = cfg.get("algorithm", "ssl")
    try:
        raw = Dataset.from_arrays(x, y)
        if algorithm == "ssl":
            ds = standardize(raw)
            config = _ssl_config_from_dict(cfg, ds.p)
            rng = RngSpec(_resolve_seed(args.seed))
            exit_code = EXIT_OK
            try:
                fit = fit_ssl(ds, config, rng)
            except DidNotConvergeError as exc:
                fit = exc.fit
                exit_code = EXIT_NOT_CONVERGED
            payload = _fit_payload_common(algorithm, ds, fit.coef)
            payload.update(
                {
                    "variance_mode": fit.variance_mode,
                    "sigma2_hat": fit.sigma2_hat,
                    "sigma2_adj": fit.sigma2_adj,
                    "theta_hat": fit.theta_hat,
                    "converged": fit.ladder_trace[-1].converged,
                    "trace": _trace_rows(fit),
                }
            )
            _write_json(args.out, payload)
            return exit_code
        if algorithm == "conjugate_em":
            ds = standardize(raw)
            config = ConjEmConfig(
                lambda0=float(cfg["lambda0"]),
                lambda1=float(cfg.get("lambda1", 1.0)),
                a=float(cfg.get("a", 1.0)),
                b=float(cfg["b"]) if cfg.get("b") is not None else float(ds.p),
                tol=float(cfg.get("tol", 1e-6)),
                max_iter=int(cfg.get("max_iter", 1000)),
                theta_init=float(cfg.get("theta_init", 0.5)),
                sigma_init=cfg.get("sigma_init"),
            )
            exit_code = EXIT_OK
            try:
                fit = run_conj_em(ds, config)
            except DidNotConvergeError as exc:
                fit = exc.fit
                exit_code = EXIT_NOT_CONVERGED
            payload = _fit_payload_common(algorithm, ds, fit.beta)
            payload.update(
                {
                    "sigma_hat": fit.sigma_hat,
                    "sigma2_hat": fit.sigma_hat**2,
                    "theta_hat": fit.theta_hat,
                    "iterations": fit.iterations,
                    "converged": fit.converged,
                    "objective_trace": list(fit.objective_trace),
                }
            )
            _write_json(args.out, payload)
            return exit_code
        if algorithm == "lasso":
            ds = standardize(raw)
            coef = lasso_cd(ds, float(cfg["lam"]), tol=float(cfg.get("tol", 1e-8)))
            payload = _fit_payload_common(algorithm, ds, coef)
            payload["rss"] = residual_ss(ds, coef)
            _write_json(args.out, payload)
            return EXIT_OK
        if algorithm == "scaled_lasso":
            ds = standardize(raw)
            lam0 = float(cfg["lambda0"]) if "lambda0" in cfg else universal_lambda0(ds.n, ds.p)
            fit = scaled_lasso(ds, lam0)
            payload = _fit_payload_common(algorithm, ds, fit.beta)
            payload.update(
                {
                    "sigma_hat": fit.sigma_hat,
                    "sigma2_hat": fit.sigma_hat**2,
                    "lambda0": fit.lambda0,
                    "iterations": fit.iterations,
                    "degenerate": fit.degenerate,
                }
            )
            _write_json(args.out, payload)
            return EXIT_OK
        if algorithm in ("least_squares", "conjugate_ridge", "zellner", "gibbs_ridge"):
            if algorithm == "least_squares":
                est = least_squares(raw)
            elif algorithm == "conjugate_ridge":
                est = conjugate_ridge(raw, float(cfg["tau2"]))
            elif algorithm == "zellner":
                est = zellner(raw, float(cfg["g"]))
            else:
                rng = RngSpec(_resolve_seed(args.seed))
                chain = gibbs_independent_ridge(
                    raw,
                    float(cfg["tau2"]),
                    iterations=int(cfg.get("iterations", 5000)),
                    burn_in=int(cfg.get("burn_in", 1000)),
                    rng=rng,
                )
                if cfg.get("chain_csv"):
                    chain.to_csv(cfg["chain_csv"])
                est = chain.estimates(float(cfg["tau2"]))
            payload = {
                "algorithm": algorithm,
                "n": raw.n,
                "p": raw.p,
                "coefficients": _sparse_coding(est.beta_mean),
                "intercept": 0.0,
                "sigma2_hat": est.sigma2_estimate,
                "estimator_kind": est.estimator_kind,
            }
            _write_json(args.out, payload)
            return EXIT_OK
        print(f"error: unknown algorithm {algorithm!r}", file=sys.stderr)
        return EXIT_INPUT
    except (SpikeslabError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def cmd_simulate(args) -> int:
    try:
        if args.scenario:
            with open(args.scenario, "r", encoding="utf-8") as fh:
                scen_dict = json.load(fh)
        else:
            scen_dict = {}
        if args.seed is not None or "seed" not in scen_dict:
            scen_dict["seed"] = _resolve_seed(args.seed)
        scenario = SimScenario.from_dict(scen_dict)
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        report = run_replications(
            scenario, methods, args.reps, parallelism=args.jobs, timing=args.timings
        )
    except (OSError, json.JSONDecodeError, SpikeslabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.out:
        _write_json(args.out, report.to_json_dict())
    if args.csv:
        report.to_csv(args.csv)
        if not args.no_figures:
            from .plots import metric_boxplot

            stem = Path(args.csv)
            metric_boxplot(report, "sigma2_estimate", stem.with_name(stem.stem + "_sigma2.png"))
            metric_boxplot(report, "ham", stem.with_name(stem.stem + "_ham.png"))
    return EXIT_OK


def cmd_cv(args) -> int:
    try:
        x = load_design_csv(args.x)
        y = load_response_csv(args.y)
        dataset = Dataset.from_arrays(x, y)
        rng = RngSpec(_resolve_seed(args.seed))
        cv = kfold_cv(dataset, args.method, args.k, rng)
    except (OSError, SpikeslabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    payload = {"method": args.method, "k": args.k, "cv_error": cv}
    if args.out:
        _write_json(args.out, payload)
    else:
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def cmd_check_theory(args) -> int:
    rng = RngSpec(_resolve_seed(args.seed))
    rows = run_theory_suite(rng, draws=args.draws)
    payload = {"draws": args.draws, "checks": rows, "all_passed": all(r["passed"] for r in rows)}
    if args.out:
        _write_json(args.out, payload)
    for row in rows:
        status = "pass" if row["passed"] else "FAIL"
        print(f"{status}  {row['name']}")
    return EXIT_OK if payload["all_passed"] else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikeslab",
        description="Sparse regression with simultaneous error-variance estimation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit one model to CSV data")
    p_fit.add_argument("--x", required=True, help="design matrix CSV (headerless)")
    p_fit.add_argument("--y", required=True, help="response CSV (single column)")
    p_fit.add_argument("--config", required=True, help="JSON config with an 'algorithm' key")
    p_fit.add_argument("--out", required=True, help="output JSON path")
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="run the replication benchmark")
    p_sim.add_argument("--scenario", default=None, help="scenario JSON (default: built-in)")
    p_sim.add_argument(
        "--methods",
        default="ssl-unknown,ssl-fixed:3.0,scaled-ssl,scaled-lasso",
        help=f"comma-separated method specs; known: {', '.join(method_names())}",
    )
    p_sim.add_argument("--reps", type=int, default=50)
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.add_argument("--out", default=None, help="report JSON path")
    p_sim.add_argument("--csv", default=None, help="report CSV path (figures rendered next to it)")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--timings", action="store_true", help="record wall time per fit")
    p_sim.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering next to the CSV"
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_cv = sub.add_parser("cv", help="k-fold cross-validation error")
    p_cv.add_argument("--x", required=True)
    p_cv.add_argument("--y", required=True)
    p_cv.add_argument("--method", default="ssl-unknown")
    p_cv.add_argument("--k", type=int, default=8)
    p_cv.add_argument("--seed", type=int, default=None)
    p_cv.add_argument("--out", default=None)
    p_cv.set_defaults(func=cmd_cv)

    p_chk = sub.add_parser("check-theory", help="run the proposition checks")
    p_chk.add_argument("--draws", type=int, default=100_000)
    p_chk.add_argument("--seed", type=int, default=None)
    p_chk.add_argument("--out", default=None)
    p_chk.set_defaults(func=cmd_check_theory)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
