"""Robust H-infinity and Kalman estimation for uncertain linear quantum systems."""

from ._accel import backend
from .care import CareProblem, CareSolution, solve_care, solve_lyapunov
from .errors import (
    ConfigError,
    InfeasibleError,
    InputError,
    NoStabilizingSolution,
    NumericalError,
    PreconditionError,
    QHinfError,
)
from .freq import (
    FrequencyResponse,
    RationalTF,
    StateSpaceSystem,
    error_system,
    estimator_tf,
    freq_response,
    hinf_norm,
    linf_norm,
    select_channel,
)
from .hinf import (
    Estimator,
    SynthesisParams,
    build_scaled_plant,
    check_assumptions,
    closed_form_barred,
    design_robust_estimator,
    gamma_search,
    loop_shift,
)
from .kalman import KalmanFilter, kalman_filter, solve_kalman_riccati
from .model import (
    HomodyneConfig,
    QuantumPlant,
    UncertaintyModel,
    apply_uncertainty,
    build_doubled,
    build_homodyne_matrix,
    check_physical_realizability,
    chi_uncertainty,
    kappa_uncertainty,
    make_squeezer,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
