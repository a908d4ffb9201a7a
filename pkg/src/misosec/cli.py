"""Command-line front end.

Subcommands:

  rate         exact secrecy rates for one seeded channel realization
  asymptotic   large-system deterministic equivalent for (beta, nu, xi, rho)
  optimize-xi  rate-maximizing regularization (large-system, or per
               realization with --finite)
  fig1         ergodic-rate sweep vs. the deterministic equivalent -> CSV
  fig2         relative correlation loss curve -> CSV
  fig3         CCDF of the normalized regularization gap -> CSV
  selftest     embedded consistency checks (closed-form reductions and
               the analytic derivative)

SNR is taken in dB everywhere on the surface and converted to linear
internally.  Flag values override config-file values; the effective
merged configuration is echoed in the CSV metadata sidecar and printed
by --show-config.  Exit codes: 0 success, 1 validation error, 2 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .asymptotics import (
    rci_large_system_rate,
    toeplitz_exponential_rate,
    uncorrelated_closed_form,
)
from .channel import SystemDims, sample_channel
from .correlation import CorrelationModel
from .errors import ConvergenceError, MisosecError, ModelValidationError
from .experiments import (
    ExperimentConfig,
    POLICY_FIXED,
    POLICY_LARGE_SYSTEM,
    ccdf_to_records,
    ccdf_xi_gap,
    ergodic_rate_sweep,
    relative_loss_curve,
    rho_from_db,
    run_and_write,
)
from .optimizer import optimal_xi_finite, optimal_xi_large_system, rate_derivative_wrt_xi
from .precoders import rci_precoder
from .secrecy import per_user_secrecy_rates

_DEFAULT_RHO_DB_GRID = "-5,-2.5,0,2.5,5,7.5,10,12.5,15,17.5,20,22.5,25"

_DEFAULTS: dict[str, dict] = {
    "rate": {"M": 8, "K": 8, "nu": 0.0, "xi": 1.0, "rho_db": 10.0, "seed": 0},
    "asymptotic": {"beta": 1.0, "nu": 0.0, "xi": 1.0, "rho_db": 10.0},
    "optimize-xi": {
        "beta": 1.0, "nu": 0.0, "rho_db": 10.0,
        "finite": False, "M": 16, "K": 16, "seed": 0,
    },
    "fig1": {
        "M": 64, "beta": "0.5,1,2", "nu": 0.5, "rho_db": _DEFAULT_RHO_DB_GRID,
        "trials": 100, "seed": 0, "out": "fig1.csv", "threads": 1,
        "xi": None, "xi_policy": POLICY_LARGE_SYSTEM, "gamma_mode": "per-realization",
        "model": None,
    },
    "fig2": {
        "beta": 0.8, "rho_db": "0,10,20",
        "nu": "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", "out": "fig2.csv",
    },
    "fig3": {
        "M": "8,16,32", "beta": 1.0, "nu": 0.5, "rho_db": 10.0,
        "trials": 500, "seed": 0, "out": "fig3.csv", "threads": 1,
    },
    "selftest": {},
}


class _CliValidationError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through our own
    # validation error so the CLI keeps exit 2 for solver failures.
    def error(self, message):
        raise _CliValidationError(message)


def _float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x != ""]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x != ""]


def _model_from(nu: float) -> CorrelationModel:
    return CorrelationModel.toeplitz_exponential(nu) if nu > 0.0 else CorrelationModel.identity()


def _build_parser() -> _Parser:
    parser = _Parser(prog="misosec", description=__doc__, add_help=True)
    sub = parser.add_subparsers(dest="subcommand")

    def add(name: str, flags: list[str]) -> argparse.ArgumentParser:
        p = sub.add_parser(name)
        for flag in flags:
            kwargs: dict = {"default": None}
            if flag in ("--finite", "--show-config"):
                kwargs = {"action": "store_true", "default": None}
            p.add_argument(flag, **kwargs)
        p.add_argument("--config", default=None)
        p.add_argument("--show-config", action="store_true", default=None)
        return p

    add("rate", ["--M", "--K", "--nu", "--xi", "--rho-db", "--seed"])
    add("asymptotic", ["--beta", "--nu", "--xi", "--rho-db"])
    add("optimize-xi", ["--beta", "--nu", "--rho-db", "--finite", "--M", "--K", "--seed"])
    add("fig1", ["--M", "--beta", "--nu", "--rho-db", "--trials", "--seed", "--out",
                 "--threads", "--xi", "--xi-policy", "--gamma-mode"])
    add("fig2", ["--beta", "--rho-db", "--nu", "--out"])
    add("fig3", ["--M", "--beta", "--nu", "--rho-db", "--trials", "--seed", "--out",
                 "--threads"])
    add("selftest", [])
    return parser


def _merge_config(name: str, args: argparse.Namespace) -> dict:
    merged = dict(_DEFAULTS[name])
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _CliValidationError(f"--config: cannot read {args.config}: {exc}")
        unknown = set(file_cfg) - set(merged)
        if unknown:
            raise _CliValidationError(
                f"--config: unknown keys for {name}: {sorted(unknown)}"
            )
        merged.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("subcommand", "config", "show_config") or value is None:
            continue
        merged[key] = value
    return merged


def _coerce(cfg: dict, key: str, kind, flag: str):
    try:
        return kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise _CliValidationError(f"{flag}: {exc}")


def _cmd_rate(cfg: dict) -> int:
    M = _coerce(cfg, "M", int, "--M")
    K = _coerce(cfg, "K", int, "--K")
    nu = _coerce(cfg, "nu", float, "--nu")
    xi = _coerce(cfg, "xi", float, "--xi")
    rho_db = _coerce(cfg, "rho_db", float, "--rho-db")
    seed = _coerce(cfg, "seed", int, "--seed")
    rho = rho_from_db(rho_db)
    H = sample_channel(SystemDims(M=M, K=K), _model_from(nu), seed).H
    report = per_user_secrecy_rates(H, rci_precoder(H, xi), rho)
    print(f"M={M} K={K} nu={nu:.6g} xi={xi:.10g} rho_db={rho_db:.6g} seed={seed}")
    print(f"gamma = {report.gamma:.10g}")
    for k, r in enumerate(report.per_user_rates):
        print(
            f"user {k:3d}: rate={r:.10f}  signal={report.signal_terms[k]:.6g}  "
            f"interference={report.interference_terms[k]:.6g}  "
            f"leakage={report.leakage_terms[k]:.6g}"
        )
    print(f"sum rate          = {report.sum_rate:.10f}")
    print(f"per-antenna rate  = {report.sum_rate / M:.10f}")
    print(f"mean per-user rate= {report.sum_rate / K:.10f}")
    return 0


def _cmd_asymptotic(cfg: dict) -> int:
    beta = _coerce(cfg, "beta", float, "--beta")
    nu = _coerce(cfg, "nu", float, "--nu")
    xi = _coerce(cfg, "xi", float, "--xi")
    rho_db = _coerce(cfg, "rho_db", float, "--rho-db")
    de = rci_large_system_rate(_model_from(nu), beta, xi, rho_from_db(rho_db))
    print(f"beta={beta:.6g} nu={nu:.6g} xi={xi:.10g} rho_db={rho_db:.6g}")
    print(f"eta        = {de.eta:.10f}")
    for (i, j), value in sorted(de.moments.items()):
        print(f"E_{i}{j}       = {value:.10g}")
    print(f"a_limit    = {de.a_limit:.10f}")
    print(f"b_limit    = {de.b_limit:.10f}")
    print(f"gamma_limit= {de.gamma_limit:.10f}")
    print(f"rate       = {de.rate:.10f}")
    return 0


def _cmd_optimize_xi(cfg: dict) -> int:
    beta = _coerce(cfg, "beta", float, "--beta")
    nu = _coerce(cfg, "nu", float, "--nu")
    rho_db = _coerce(cfg, "rho_db", float, "--rho-db")
    rho = rho_from_db(rho_db)
    model = _model_from(nu)
    if cfg.get("finite"):
        M = _coerce(cfg, "M", int, "--M")
        K = _coerce(cfg, "K", int, "--K")
        seed = _coerce(cfg, "seed", int, "--seed")
        H = sample_channel(SystemDims(M=M, K=K), model, seed).H
        sol = optimal_xi_finite(H, rho)
        rate = per_user_secrecy_rates(H, rci_precoder(H, sol.xi), rho).sum_rate
        label = "sum rate"
    else:
        sol = optimal_xi_large_system(model, beta, rho)
        rate = rci_large_system_rate(model, beta, sol.xi, rho).rate
        label = "rate"
    print(f"xi         = {sol.xi:.10g}")
    print(f"method     = {sol.method}")
    print(f"residual   = {sol.residual:.6g}")
    print(f"iterations = {sol.iterations}")
    print(f"converged  = {sol.converged}")
    if sol.flat_objective:
        print("flat objective: the rate does not depend on xi here")
    if sol.warning:
        print(f"warning    = {sol.warning}")
    print(f"{label}       = {rate:.10f}")
    return 0


def _cmd_fig1(cfg: dict) -> int:
    started = time.time()
    M = _coerce(cfg, "M", int, "--M")
    betas = _coerce(cfg, "beta", _float_list, "--beta")
    trials = _coerce(cfg, "trials", int, "--trials")
    seed = _coerce(cfg, "seed", int, "--seed")
    threads = _coerce(cfg, "threads", int, "--threads")
    rho_db_grid = _coerce(cfg, "rho_db", _float_list, "--rho-db")
    if cfg.get("model") is not None:
        model = CorrelationModel.from_dict(cfg["model"])
    else:
        model = _model_from(_coerce(cfg, "nu", float, "--nu"))
    xi = cfg.get("xi")
    policy = cfg.get("xi_policy") or (POLICY_FIXED if xi is not None else POLICY_LARGE_SYSTEM)
    config = ExperimentConfig(
        dims_list=tuple(SystemDims(M=M, K=round(b * M)) for b in betas),
        model=model,
        rho_grid=tuple(rho_from_db(db) for db in rho_db_grid),
        xi_policy=policy,
        xi_fixed=float(xi) if xi is not None else None,
        trials=trials,
        base_seed=seed,
        output_path=str(cfg["out"]),
        gamma_mode=str(cfg["gamma_mode"]),
    )
    records = ergodic_rate_sweep(config, threads=threads)
    echo = dict(cfg, model=model.to_dict())
    run_and_write(records, config.output_path, echo, started)
    print(f"wrote {len(records)} records to {config.output_path}")
    return 0


def _cmd_fig2(cfg: dict) -> int:
    started = time.time()
    beta = _coerce(cfg, "beta", float, "--beta")
    rho_db_grid = _coerce(cfg, "rho_db", _float_list, "--rho-db")
    nu_grid = _coerce(cfg, "nu", _float_list, "--nu")
    out = str(cfg["out"])
    records = relative_loss_curve(
        beta, tuple(rho_from_db(db) for db in rho_db_grid), tuple(nu_grid)
    )
    run_and_write(records, out, dict(cfg), started)
    print(f"wrote {len(records)} records to {out}")
    return 0


def _cmd_fig3(cfg: dict) -> int:
    started = time.time()
    M_list = _coerce(cfg, "M", _int_list, "--M")
    beta = _coerce(cfg, "beta", float, "--beta")
    nu = _coerce(cfg, "nu", float, "--nu")
    rho_db = _coerce(cfg, "rho_db", float, "--rho-db")
    trials = _coerce(cfg, "trials", int, "--trials")
    seed = _coerce(cfg, "seed", int, "--seed")
    threads = _coerce(cfg, "threads", int, "--threads")
    out = str(cfg["out"])
    ccdfs = ccdf_xi_gap(tuple(M_list), rho_db, nu, trials, seed, beta=beta, threads=threads)
    records = [row for c in ccdfs for row in ccdf_to_records(c, rho_db, nu)]
    run_and_write(records, out, dict(cfg), started)
    for c in ccdfs:
        print(f"M={c.M}: mean gap = {c.mean_gap:.6f} (excluded {c.excluded})")
    print(f"wrote {len(records)} records to {out}")
    return 0


def _cmd_selftest(cfg: dict) -> int:
    failures = 0

    def check(name: str, residual: float, limit: float) -> None:
        nonlocal failures
        status = "PASS" if residual < limit else "FAIL"
        if status == "FAIL":
            failures += 1
        print(f"{name}: residual {residual:.3e} (limit {limit:.0e}) {status}")

    identity = CorrelationModel.identity()
    worst = 0.0
    for beta in (0.5, 1.0, 2.0):
        for xi in (0.1, 1.0, 10.0):
            for rho in (1.0, 10.0, 100.0):
                de = rci_large_system_rate(identity, beta, xi, rho)
                worst = max(worst, abs(de.rate - uncorrelated_closed_form(beta, xi, rho)))
    check("uncorrelated-reduction", worst, 1e-8)

    worst = 0.0
    for nu in (0.2, 0.5, 0.8):
        model = CorrelationModel.toeplitz_exponential(nu)
        for beta in (0.5, 1.0):
            for xi in (0.1, 1.0):
                de = rci_large_system_rate(model, beta, xi, 10.0)
                worst = max(worst, abs(de.rate - toeplitz_exponential_rate(nu, beta, xi, 10.0)))
    check("toeplitz-closed-form", worst, 1e-6)

    worst = 0.0
    for nu, beta, rho, xi in (
        (0.0, 0.8, 10.0, 0.05), (0.5, 1.0, 10.0, 0.1), (0.3, 0.5, 3.0, 0.3),
        (0.7, 1.2, 30.0, 0.05), (0.5, 0.8, 1.0, 0.2), (0.2, 1.5, 10.0, 0.08),
    ):
        model = _model_from(nu)
        analytic = rate_derivative_wrt_xi(model, beta, rho, xi).derivative
        h = 1e-6 * xi
        up = rci_large_system_rate(model, beta, xi + h, rho).rate
        dn = rci_large_system_rate(model, beta, xi - h, rho).rate
        fd = (up - dn) / (2.0 * h)
        worst = max(worst, abs(analytic - fd) / max(abs(fd), 1e-12))
    check("rate-derivative", worst, 1e-4)

    return 1 if failures else 0


_COMMANDS = {
    "rate": _cmd_rate,
    "asymptotic": _cmd_asymptotic,
    "optimize-xi": _cmd_optimize_xi,
    "fig1": _cmd_fig1,
    "fig2": _cmd_fig2,
    "fig3": _cmd_fig3,
    "selftest": _cmd_selftest,
}


def run_cli(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand is None:
            raise _CliValidationError("a subcommand is required (see --help)")
        cfg = _merge_config(args.subcommand, args)
        if args.show_config:
            print(json.dumps(cfg, indent=2, sort_keys=True, default=str))
            return 0
        return _COMMANDS[args.subcommand](cfg)
    except _CliValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 2
    except MisosecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
