"""Simulation and numerical verification tools for stationary isotropic
Poisson hyperplane mosaics: typical-cell and zero-cell samplers, large-cell
point processes and their limit laws, stopping-set radii, and the mixed
integral geometry behind them."""

__version__ = "0.1.0"

from .errors import (
    CertificationStarvation,
    ConfigInvalid,
    CoverageFailure,
    DegeneratePolytope,
    DimensionUnsupported,
    InballHit,
    InsufficientSamples,
    MosaicError,
    NoRoot,
    NotGeneralPosition,
    OutOfRange,
    PreconditionViolated,
    QuadratureNotConverged,
    Unbounded,
    WindowNotContained,
)
from .geometry import (
    Ball,
    Box,
    Hyperplane,
    Polytope,
    SizeFunctional,
    box_polytope,
    cell_polytope,
    deviation_theta,
    phi_mean_width,
    polytope_size,
    random_rotation,
    regular_polygon,
    simplex_inball,
    simplex_inball_batch,
    simplex_volume_delta,
    unit_ball_volume,
    unit_sphere_area,
)
from .process import ProcessParams, Realization, replicate_rng, sample, uniform_sphere
from .integral import (
    BPCheck,
    DecayCheck,
    ETermEstimate,
    FixedPointResult,
    L_of_a,
    bp_verify,
    cap_integral,
    decay_check_le1,
    delta_star,
    directional_hit_integral,
    directional_total_mass,
    e_term_estimate,
    pair_hit_closed_form_d3,
    pair_hit_measure,
)
from .mosaic import (
    CellHarvest,
    CellRecord,
    EmpiricalDistribution,
    GTransform,
    candidate_cells,
    cell_intensity_empirical,
    certify_cell,
    default_guard,
    dump_cells_csv,
    extract_cells,
    fill_body,
    g_inverse,
    g_transform,
    gamma_d_estimate,
    load_cells_csv,
    sample_palm_cells,
    sample_typical_cells,
    zero_cell,
)
from .stopping import (
    ConeSystem,
    DecorrelationTable,
    StoppingRecord,
    btR_empirical,
    btR_survival,
    build_cone_system,
    cell_determination_gap,
    cone_radii,
    decorrelation_experiment,
    removal_bound_check,
    stopping_radius,
    stopping_set_property_test,
)
from .extremes import (
    AsymptoteReport,
    CountLaw,
    IsoperimetricReport,
    KendallReport,
    MarkedPoint,
    MarkedProcess,
    MultibinReport,
    ProcessEnsemble,
    TVReport,
    build_size_corpus,
    build_xi_n,
    build_zeta_n,
    count_tv,
    g_inverse_asymptote_check,
    isoperimetric_check,
    kendall_experiment,
    multibin_poisson_test,
    run_ensemble,
    xi_expected_count,
    zeta_expected_count,
)

__all__ = [name for name in dir() if not name.startswith("_")]
