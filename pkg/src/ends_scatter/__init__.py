"""Numerical laboratory for scattering on rotationally symmetric surfaces
with several ends: stationary phases, limiting resolvents, distorted
Fourier transforms, scattering matrices and comparison dynamics."""

from .config import (
    ConfigError,
    ExperimentConfig,
    GridConfig,
    RunConfig,
    default_config,
    load_config,
    parse_config,
)
from .dynamics import (
    SpectralProfile,
    comparison_state,
    dollard_state,
    eikonal,
    hamilton_jacobi_residual,
    leading_term,
    phase_modifier,
    shortrange_state,
    state_norm,
    stationary_point,
)
from .fourier import (
    BoundaryField,
    ScatteringData,
    distorted_ft,
    eigenfunction_decompose,
    generalized_eigenfunction,
    scattering_matrix,
    transmission_metric,
    wkb_eigenfunction,
)
from .geometry import (
    CutoffFamily,
    EndProfile,
    ManifoldModel,
    classify_potential,
    critical_energy,
    effective_potential,
    phase_a,
    phase_b,
    riccati_residual,
)
from .mode_reduction import (
    ModeOperator,
    RadialGrid,
    RadialState,
    besov_norm,
    besov_norms,
    half_density_map,
)
from .oracle import (
    closed_form_scattering,
    dense_hamiltonian_2d,
    free_green,
    small_eps_resolvent,
)
from .presets import by_name, model_a, model_b, model_c, model_d, model_free
from .propagator import (
    EvolutionConfig,
    Propagator,
    adjoint_identity_check,
    cook_integrand,
    end_projection,
    energy_filter,
    evolve,
    transmission_experiment,
    wave_operator,
)
from .resolvent import (
    JostPair,
    jost_pair,
    limiting_resolvent,
    radiation_residual,
    sommerfeld_check,
)

__version__ = "0.1.0"
