"""Seeded Monte Carlo experiments and their record/CSV plumbing.

Three experiment families are provided, mirroring the package's three
headline comparisons:

  * ergodic_rate_sweep   -- simulated ergodic per-antenna secrecy sum
                            rate against its large-system equivalent,
  * relative_loss_curve  -- relative rate loss due to correlation, both
                            systems at their own optimal regularization,
  * ccdf_xi_gap          -- distribution of the sum-rate sacrifice from
                            using the large-system regularization
                            instead of the per-realization optimum.

Every emitted row carries the seed that produced it; trial seeds are
derived as base_seed XOR trial_index, so a (config, base_seed) pair
fixes every byte of the CSV output.  All experiments share one CSV
schema (see CSV_COLUMNS); fields that do not apply to an experiment are
left empty, and aggregate rows are marked in the flags column.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .asymptotics import (
    DEFAULT_FIXED_POINT,
    FixedPointSettings,
    rci_large_system_rate,
    uncorrelated_closed_form,
)
from .channel import SystemDims, sample_channel
from .correlation import (
    DEFAULT_QUADRATURE,
    KIND_IDENTITY,
    KIND_TOEPLITZ_EXP,
    CorrelationModel,
    QuadratureSettings,
)
from .errors import MisosecError, ModelValidationError
from .optimizer import DEFAULT_XI_BRACKET, optimal_xi_finite, optimal_xi_large_system
from .precoders import PrecoderOutput, rci_precoder
from .secrecy import per_user_secrecy_rates

POLICY_LARGE_SYSTEM = "large-system-optimal"
POLICY_PER_REALIZATION = "per-realization-optimal"
POLICY_FIXED = "fixed"

GAMMA_PER_REALIZATION = "per-realization"
GAMMA_ERGODIC = "ergodic"

CSV_COLUMNS = (
    "experiment",
    "M",
    "K",
    "beta",
    "nu",
    "rho_db",
    "xi_policy",
    "xi_used",
    "seed",
    "per_antenna_sum_rate",
    "per_user_mean_rate",
    "deterministic_rate",
    "gap",
    "flags",
)

_INT_COLUMNS = {"M", "K", "seed"}
_STR_COLUMNS = {"experiment", "xi_policy", "flags"}


def rho_from_db(rho_db: float) -> float:
    return 10.0 ** (rho_db / 10.0)


def db_from_rho(rho: float) -> float:
    return 10.0 * np.log10(rho)


def trial_seed(base_seed: int, index: int) -> int:
    """Per-trial seed: base_seed XOR trial index (64-bit)."""
    return (base_seed ^ index) & (2**64 - 1)


@dataclass(frozen=True)
class TrialRecord:
    """One CSV row; None marks fields that do not apply.

    gap is a relative difference: simulated-vs-deterministic rate for
    the ergodic sweep, correlation loss for the loss curve, and the
    normalized regularization sacrifice for the CCDF experiment.
    """

    experiment: str
    M: int | None
    K: int | None
    beta: float
    nu: float | None
    rho_db: float
    xi_policy: str
    xi_used: float | None
    seed: int | None
    per_antenna_sum_rate: float | None
    per_user_mean_rate: float | None
    deterministic_rate: float | None
    gap: float | None
    flags: str = ""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of an ergodic-rate sweep.

    rho_grid holds linear SNR values (CLI and config files accept dB and
    convert).  gamma_mode "ergodic" averages the power normalization
    over all trials before computing rates, instead of using each
    realization's own; it requires a trial-independent xi policy.
    """

    dims_list: tuple[SystemDims, ...]
    model: CorrelationModel
    rho_grid: tuple[float, ...]
    xi_policy: str = POLICY_LARGE_SYSTEM
    xi_fixed: float | None = None
    trials: int = 100
    base_seed: int = 0
    output_path: str = "fig1.csv"
    gamma_mode: str = GAMMA_PER_REALIZATION

    def __post_init__(self) -> None:
        if not self.dims_list:
            raise ModelValidationError("dims_list must be nonempty")
        if not self.rho_grid or any(r <= 0.0 for r in self.rho_grid):
            raise ModelValidationError("rho_grid must be nonempty with positive entries")
        if self.trials < 1:
            raise ModelValidationError(f"trials must be >= 1, got {self.trials}")
        if self.xi_policy not in (POLICY_LARGE_SYSTEM, POLICY_PER_REALIZATION, POLICY_FIXED):
            raise ModelValidationError(f"unknown xi policy {self.xi_policy!r}")
        if self.xi_policy == POLICY_FIXED and (self.xi_fixed is None or self.xi_fixed <= 0.0):
            raise ModelValidationError("fixed xi policy requires xi_fixed > 0")
        if self.gamma_mode not in (GAMMA_PER_REALIZATION, GAMMA_ERGODIC):
            raise ModelValidationError(f"unknown gamma mode {self.gamma_mode!r}")
        if self.gamma_mode == GAMMA_ERGODIC and self.xi_policy == POLICY_PER_REALIZATION:
            raise ModelValidationError(
                "ergodic gamma averaging requires a trial-independent xi policy"
            )


def _model_nu(model: CorrelationModel) -> float | None:
    if model.kind == KIND_TOEPLITZ_EXP:
        return model.nu
    if model.kind == KIND_IDENTITY:
        return 0.0
    return None


def _map_trials(fn, n: int, threads: int) -> list:
    """Run fn(0..n-1), merging results in trial order regardless of
    completion order."""
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def ergodic_rate_sweep(
    cfg: ExperimentConfig,
    s: FixedPointSettings = DEFAULT_FIXED_POINT,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
    threads: int = 1,
) -> list[TrialRecord]:
    """Monte Carlo ergodic secrecy rates with their large-system limits.

    Emits one record per trial plus an aggregate record (mean over
    trials, standard error in the flags) per (dims, rho) cell.  Solver
    failures annotate the affected record instead of aborting the sweep.
    The deterministic reference is always evaluated at the cell's
    trial-independent regularization (the large-system optimum when the
    policy is per-realization).
    """
    nu = _model_nu(cfg.model)
    records: list[TrialRecord] = []
    for dims in cfg.dims_list:
        beta = dims.beta
        for rho in cfg.rho_grid:
            rho_db = float(db_from_rho(rho))
            if cfg.xi_policy == POLICY_FIXED:
                xi_cell = cfg.xi_fixed
            else:
                xi_cell = optimal_xi_large_system(cfg.model, beta, rho, q=q).xi
            det_rate = rci_large_system_rate(cfg.model, beta, xi_cell, rho, s, q).rate

            def one_trial(t: int):
                seed = trial_seed(cfg.base_seed, t)
                try:
                    H = sample_channel(dims, cfg.model, seed).H
                    if cfg.xi_policy == POLICY_PER_REALIZATION:
                        xi_t = optimal_xi_finite(H, rho).xi
                    else:
                        xi_t = xi_cell
                    return seed, xi_t, rci_precoder(H, xi_t), H, ""
                except MisosecError as exc:
                    return seed, None, None, None, f"error:{type(exc).__name__}"

            outcomes = _map_trials(one_trial, cfg.trials, threads)
            if cfg.gamma_mode == GAMMA_ERGODIC:
                gammas = [p.gamma for _, _, p, _, f in outcomes if not f]
                gamma_bar = float(np.mean(gammas))
                outcomes = [
                    (seed, xi_t, replace(p, gamma=gamma_bar) if not f else p, H, f)
                    for seed, xi_t, p, H, f in outcomes
                ]

            cell_means = []
            for seed, xi_t, precoder, H, flag in outcomes:
                if flag:
                    records.append(
                        TrialRecord(
                            experiment="fig1", M=dims.M, K=dims.K, beta=beta, nu=nu,
                            rho_db=rho_db, xi_policy=cfg.xi_policy, xi_used=xi_t,
                            seed=seed, per_antenna_sum_rate=None, per_user_mean_rate=None,
                            deterministic_rate=det_rate, gap=None, flags=flag,
                        )
                    )
                    continue
                report = per_user_secrecy_rates(H, precoder, rho)
                per_user_mean = report.sum_rate / dims.K
                cell_means.append(per_user_mean)
                gap = (per_user_mean - det_rate) / det_rate if det_rate > 0.0 else None
                records.append(
                    TrialRecord(
                        experiment="fig1", M=dims.M, K=dims.K, beta=beta, nu=nu,
                        rho_db=rho_db, xi_policy=cfg.xi_policy, xi_used=xi_t,
                        seed=seed, per_antenna_sum_rate=report.sum_rate / dims.M,
                        per_user_mean_rate=per_user_mean, deterministic_rate=det_rate,
                        gap=gap, flags="" if gap is not None else "zero-deterministic-rate",
                    )
                )
            n = len(cell_means)
            mean = float(np.mean(cell_means)) if n else None
            stderr = float(np.std(cell_means, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            agg_gap = (mean - det_rate) / det_rate if (n and det_rate > 0.0) else None
            records.append(
                TrialRecord(
                    experiment="fig1", M=dims.M, K=dims.K, beta=beta, nu=nu,
                    rho_db=rho_db, xi_policy=cfg.xi_policy,
                    xi_used=xi_cell if cfg.xi_policy != POLICY_PER_REALIZATION else None,
                    seed=cfg.base_seed,
                    per_antenna_sum_rate=mean * dims.K / dims.M if n else None,
                    per_user_mean_rate=mean, deterministic_rate=det_rate, gap=agg_gap,
                    flags=f"aggregate;n={n};stderr={stderr:.17g};errors={cfg.trials - n}",
                )
            )
    return records


def relative_loss_curve(
    beta: float,
    rho_grid: tuple[float, ...],
    nu_grid: tuple[float, ...],
    s: FixedPointSettings = DEFAULT_FIXED_POINT,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
) -> list[TrialRecord]:
    """Relative secrecy-rate loss due to transmit correlation.

    For each (nu, rho), both the correlated and the uncorrelated
    large-system rates are evaluated at their own optimal
    regularization; the loss is their relative difference.  A zero
    uncorrelated rate makes the loss undefined and flags the record.
    """
    if any(not 0.0 <= nu < 1.0 for nu in nu_grid):
        raise ModelValidationError("nu_grid entries must lie in [0, 1)")
    records = []
    baseline: dict[float, float] = {}
    identity = CorrelationModel.identity()
    for rho in rho_grid:
        xi_tilde = optimal_xi_large_system(identity, beta, rho, q=q).xi
        baseline[rho] = uncorrelated_closed_form(beta, xi_tilde, rho)
    for nu in nu_grid:
        model = CorrelationModel.toeplitz_exponential(nu)
        for rho in rho_grid:
            xi_star = optimal_xi_large_system(model, beta, rho, q=q).xi
            rate = rci_large_system_rate(model, beta, xi_star, rho, s, q).rate
            r_tilde = baseline[rho]
            if r_tilde > 0.0:
                loss, flags = (r_tilde - rate) / r_tilde, ""
            else:
                loss, flags = None, "undefined:zero-uncorrelated-rate"
            records.append(
                TrialRecord(
                    experiment="fig2", M=None, K=None, beta=beta, nu=nu,
                    rho_db=float(db_from_rho(rho)), xi_policy=POLICY_LARGE_SYSTEM,
                    xi_used=xi_star, seed=None, per_antenna_sum_rate=None,
                    per_user_mean_rate=None, deterministic_rate=rate, gap=loss,
                    flags=flags,
                )
            )
    return records


@dataclass(frozen=True, eq=False)
class CcdfRecord:
    """Per-dimension result of the regularization-gap experiment.

    Parallel arrays hold one entry per trial (gap is NaN for excluded
    zero-rate trials); sorted_gaps/survival give the empirical survival
    function of the valid gaps.
    """

    M: int
    K: int
    xi_large_system: float
    seeds: np.ndarray
    xi_stars: np.ndarray
    rates_star: np.ndarray
    rates_fixed: np.ndarray
    gaps: np.ndarray
    sorted_gaps: np.ndarray
    survival: np.ndarray
    mean_gap: float
    excluded: int


def ccdf_xi_gap(
    M_list: tuple[int, ...],
    rho_db: float,
    nu: float,
    trials: int,
    base_seed: int,
    beta: float = 1.0,
    bracket: tuple[float, float] = DEFAULT_XI_BRACKET,
    q: QuadratureSettings = DEFAULT_QUADRATURE,
    threads: int = 1,
) -> list[CcdfRecord]:
    """Normalized sum-rate gap between per-realization and large-system
    regularization, per system size.

    The per-realization optimum dominates any fixed value by
    definition, so a searched rate that falls below the fixed one
    (possible only within the search tolerance) is treated as having
    located the fixed point itself, keeping gaps in [0, 1).
    """
    if trials < 1:
        raise ModelValidationError(f"trials must be >= 1, got {trials}")
    rho = rho_from_db(rho_db)
    model = CorrelationModel.toeplitz_exponential(nu) if nu > 0.0 else CorrelationModel.identity()
    out = []
    for M in M_list:
        K = round(beta * M)
        dims = SystemDims(M=M, K=K)
        xi_fixed = optimal_xi_large_system(model, dims.beta, rho, q=q).xi

        def one_trial(t: int):
            seed = trial_seed(base_seed, t)
            H = sample_channel(dims, model, seed).H
            sol = optimal_xi_finite(H, rho, bracket)
            r_star = per_user_secrecy_rates(H, rci_precoder(H, sol.xi), rho).sum_rate
            r_fixed = per_user_secrecy_rates(H, rci_precoder(H, xi_fixed), rho).sum_rate
            if r_star < r_fixed:
                return seed, xi_fixed, r_fixed, r_fixed
            return seed, sol.xi, r_star, r_fixed

        results = _map_trials(one_trial, trials, threads)
        seeds = np.array([r[0] for r in results], dtype=np.uint64)
        xi_stars = np.array([r[1] for r in results])
        rates_star = np.array([r[2] for r in results])
        rates_fixed = np.array([r[3] for r in results])
        gaps = np.where(rates_star > 0.0, (rates_star - rates_fixed) / rates_star, np.nan)
        valid = gaps[np.isfinite(gaps)]
        order = np.sort(valid)
        n = order.size
        survival = (n - 1.0 - np.arange(n)) / n if n else np.array([])
        out.append(
            CcdfRecord(
                M=M, K=K, xi_large_system=xi_fixed, seeds=seeds, xi_stars=xi_stars,
                rates_star=rates_star, rates_fixed=rates_fixed, gaps=gaps,
                sorted_gaps=order, survival=survival,
                mean_gap=float(valid.mean()) if n else float("nan"),
                excluded=int(trials - n),
            )
        )
    return out


def ccdf_to_records(ccdf: CcdfRecord, rho_db: float, nu: float) -> list[TrialRecord]:
    """Flatten one CcdfRecord into CSV rows (trials plus an aggregate).

    For this experiment the deterministic_rate column carries the sum
    rate at the trial's large-system regularization.
    """
    beta = ccdf.K / ccdf.M
    rows = []
    for i in range(ccdf.seeds.size):
        excluded = not np.isfinite(ccdf.gaps[i])
        rows.append(
            TrialRecord(
                experiment="fig3", M=ccdf.M, K=ccdf.K, beta=beta, nu=nu, rho_db=rho_db,
                xi_policy=POLICY_PER_REALIZATION, xi_used=float(ccdf.xi_stars[i]),
                seed=int(ccdf.seeds[i]),
                per_antenna_sum_rate=float(ccdf.rates_star[i]) / ccdf.M,
                per_user_mean_rate=float(ccdf.rates_star[i]) / ccdf.K,
                deterministic_rate=float(ccdf.rates_fixed[i]),
                gap=None if excluded else float(ccdf.gaps[i]),
                flags="excluded;zero-rate" if excluded else "",
            )
        )
    rows.append(
        TrialRecord(
            experiment="fig3", M=ccdf.M, K=ccdf.K, beta=beta, nu=nu, rho_db=rho_db,
            xi_policy=POLICY_PER_REALIZATION, xi_used=ccdf.xi_large_system, seed=None,
            per_antenna_sum_rate=None, per_user_mean_rate=None, deterministic_rate=None,
            gap=ccdf.mean_gap,
            flags=f"aggregate;n={ccdf.seeds.size - ccdf.excluded};excluded={ccdf.excluded}",
        )
    )
    return rows


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_records(records: list[TrialRecord], path: str) -> None:
    """Write records as CSV with the fixed column order of CSV_COLUMNS.

    Floats carry 17 significant digits so parsing the file recovers the
    records exactly; two runs of the same config produce byte-identical
    files.
    """
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for rec in records:
                fh.write(",".join(_format_cell(getattr(rec, c)) for c in CSV_COLUMNS) + "\n")
    except OSError as exc:
        raise OSError(f"failed to write records to {path}: {exc}") from exc


def read_records(path: str) -> list[TrialRecord]:
    """Parse a CSV produced by write_records back into records."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ModelValidationError(f"unexpected CSV header in {path}")
        records = []
        for line in fh:
            cells = line.rstrip("\n").split(",")
            kwargs = {}
            for name, cell in zip(CSV_COLUMNS, cells):
                if name in _STR_COLUMNS:
                    kwargs[name] = cell
                elif cell == "":
                    kwargs[name] = None
                elif name in _INT_COLUMNS:
                    kwargs[name] = int(cell)
                else:
                    kwargs[name] = float(cell)
            records.append(TrialRecord(**kwargs))
    return records


def write_metadata(path: str, config: dict, solver: dict, wall_clock_seconds: float) -> None:
    """JSON sidecar with the effective config, solver settings, code
    version, and wall-clock time (the one intentionally non-reproducible
    field)."""
    payload = {
        "version": __version__,
        "config": config,
        "solver": solver,
        "wall_clock_seconds": wall_clock_seconds,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_and_write(records: list[TrialRecord], path: str, config: dict, started: float) -> None:
    """Write a records CSV plus its metadata sidecar at path + '.meta.json'."""
    write_records(records, path)
    solver = {
        "fixed_point": {
            "tolerance": DEFAULT_FIXED_POINT.tolerance,
            "max_iterations": DEFAULT_FIXED_POINT.max_iterations,
            "damping": DEFAULT_FIXED_POINT.damping,
        },
        "quadrature": {
            "node_count": DEFAULT_QUADRATURE.node_count,
            "scheme": DEFAULT_QUADRATURE.scheme,
        },
    }
    write_metadata(path + ".meta.json", config, solver, time.time() - started)
