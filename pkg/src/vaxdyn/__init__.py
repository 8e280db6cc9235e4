"""Eight-compartment vaccination epidemic model toolkit.

Submodules: ``params`` (parameter values and files), ``model`` (state and
right-hand side), ``integrate`` (adaptive trajectories), ``threshold``
(reproduction number, DFE stability), ``equilibria`` (endemic branch),
``bifurcation`` (direction at the threshold), ``fitting`` (data ingestion
and calibration), ``sensitivity`` (elasticity indices), ``cli``.
"""

from .bifurcation import (
    BifurcationReport,
    bifurcation_coefficients,
    bistability_demo,
    critical_beta,
    find_backward_witness,
    null_eigenvectors,
)
from .equilibria import (
    EndemicEquilibrium,
    EndemicPolynomial,
    SignCase,
    build_polynomial,
    classify,
    endemic_equilibria,
    vaccination_suppression_check,
)
from .fitting import (
    ActiveSeries,
    CaseSeries,
    FitResult,
    FitSpec,
    ParamSpec,
    default_fit_spec,
    derive_active,
    estimate_primaries,
    fit,
    initial_state_from_active,
    load_series,
    model_active,
)
from .integrate import IntegratorConfig, Trajectory, integrate, lyapunov_decrease_check
from .model import DerivedRates, State, derived_rates, force_of_infection, rhs
from .params import Params, load_params, sample_params, save_params, fitted_params, initial_estimates
from .sensitivity import local_index, normalized_index, sensitivity_table
from .threshold import (
    R0Breakdown,
    beta_for_target_r0,
    dfe_local_stability,
    disease_free_equilibrium,
    r0,
    r0_ngm_oracle,
)

__version__ = "0.1.0"
