"""Secrecy rates and linear precoding for the correlated multi-user
MISO downlink: exact finite-system rates, large-system deterministic
equivalents, regularization optimization, and seeded Monte Carlo
experiments."""

__version__ = "0.1.0"

from .asymptotics import (
    DEFAULT_FIXED_POINT,
    DeterministicEquivalent,
    FixedPointSettings,
    rci_large_system_rate,
    solve_eta,
    sub_large_system_rate,
    toeplitz_exponential_rate,
    uncorrelated_closed_form,
    uncorrelated_eta,
    zf_large_system_rate,
)
from .channel import ChannelRealization, SystemDims, hermitian_sqrt, sample_channel, sample_iid_gaussian
from .correlation import (
    DEFAULT_QUADRATURE,
    CorrelationModel,
    QuadratureSettings,
    build_correlation_matrix,
    moment_e_ij,
    spectral_expectation,
    spectral_grid,
)
from .errors import (
    ConvergenceError,
    DegenerateParameterError,
    MisosecError,
    ModelValidationError,
    SingularChannelError,
)
from .experiments import (
    CcdfRecord,
    ExperimentConfig,
    TrialRecord,
    ccdf_xi_gap,
    ergodic_rate_sweep,
    read_records,
    relative_loss_curve,
    write_records,
)
from .optimizer import (
    DerivativeBundle,
    XiSolution,
    optimal_xi_finite,
    optimal_xi_large_system,
    rate_derivative_wrt_xi,
)
from .precoders import PrecoderOutput, rci_precoder, sub_precoder, zf_precoder
from .secrecy import (
    LeakageFormQuantities,
    SecrecyReport,
    leakage_form_quantities,
    per_user_secrecy_rates,
    positive_part,
    secrecy_rates_leakage_form,
)
