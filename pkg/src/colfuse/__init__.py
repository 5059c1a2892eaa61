"""colfuse: grid-fused column trace-gas products with full sparse posterior
precision, plus hierarchical station-based error assessment."""

from .errors import InputError, NumericalError, SingularSystemError
from .types import (
    EARTH_RADIUS_KM,
    GridSpec,
    KernelFamily,
    KernelParams,
    Observation,
    Raster,
    SoundingGeometry,
    SpaceTimePoint,
    SurfaceClass,
    normalize_point,
)
from .covariance import build_cov, great_circle_km, kernel_value, scaled_distance
from .column import convolve_profile, prior_column
from .kriging import KrigingSolution, combine_ancillary, solve_kriging
from .vecchia import (
    ConditioningSets,
    Ordering,
    SparsePrecision,
    build_posterior,
    conditioning_sets,
    order_maxmin,
    order_sorted,
    posterior_precision,
    sparse_precision,
)
from .fusion import (
    DailyProduct,
    GriddedCellEstimate,
    MetaDataset,
    concat_instruments,
    effective_weights,
    fuse_day,
    sample_realizations,
)
from .validation import (
    CoincidenceCriteria,
    ErrorSummary,
    Matchup,
    StationRecord,
    TrendRow,
    aggregated_error,
    assess_product,
    colocation_error,
    match_coincidences,
    n_for_error_inflation,
    observation_error_summary,
    prior_error_assessment,
    quarterly_bootstrap,
    random_error,
    regional_trends,
    systematic_error,
)
from .synth import ScenarioConfig, simulate_gp_field, simulate_hierarchical

__version__ = "0.1.0"
