"""Session-scoped fixtures for the Monte Carlo experiments shared
between the module tests and the acceptance suite (they take minutes,
so each runs once per session)."""

import pytest

from misosec import CorrelationModel, ExperimentConfig, SystemDims
from misosec.experiments import ccdf_xi_gap, ergodic_rate_sweep, relative_loss_curve, rho_from_db

THEOREM1_SETUP = {"beta": 1.0, "nu": 0.5, "rho_db": 10.0, "trials": 100, "base_seed": 2024}
FIG3_SETUP = {"M_list": (8, 16, 32), "rho_db": 10.0, "nu": 0.5, "trials": 500, "base_seed": 7}
FIG2_SETUP = {"beta": 0.8, "rho_db": (0.0, 10.0, 20.0),
              "nu_grid": (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)}


@pytest.fixture(scope="session")
def theorem1_sweep():
    """Ergodic sweep at beta=1, nu=0.5, 10 dB for M in {16, 32, 64}."""
    cfg = ExperimentConfig(
        dims_list=tuple(SystemDims(M=m, K=m) for m in (16, 32, 64)),
        model=CorrelationModel.toeplitz_exponential(THEOREM1_SETUP["nu"]),
        rho_grid=(rho_from_db(THEOREM1_SETUP["rho_db"]),),
        trials=THEOREM1_SETUP["trials"],
        base_seed=THEOREM1_SETUP["base_seed"],
    )
    return ergodic_rate_sweep(cfg)


@pytest.fixture(scope="session")
def fig3_ccdf():
    """Regularization-gap CCDFs at beta=1, nu=0.5, 10 dB, 500 trials."""
    return ccdf_xi_gap(
        FIG3_SETUP["M_list"],
        FIG3_SETUP["rho_db"],
        FIG3_SETUP["nu"],
        FIG3_SETUP["trials"],
        FIG3_SETUP["base_seed"],
    )


@pytest.fixture(scope="session")
def fig2_records():
    """Correlation-loss records at beta=0.8 over the standard nu grid."""
    return relative_loss_curve(
        FIG2_SETUP["beta"],
        tuple(rho_from_db(db) for db in FIG2_SETUP["rho_db"]),
        FIG2_SETUP["nu_grid"],
    )
