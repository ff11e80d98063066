"""Multivariate ordered response (lattice) models: simulation, estimation,
identification diagnostics, and Monte Carlo reproduction harness."""

from .distributions import (
    Correlation,
    Law,
    bivariate_normal_cdf,
    sample,
    std_normal_cdf,
    std_normal_quantile,
)
from .lattice import (
    Dataset,
    IndexModel,
    LatticeSpec,
    Rectangle,
    categorize,
    cell_probability,
    implied_rectangle,
    read_csv,
    rectangle_bounds,
    write_csv,
)
from .simulation import (
    BUILTIN_DGP_IDS,
    CovariateSpec,
    DgpSpec,
    ErrorLaw,
    builtin_dgp,
    builtin_dgp_spec,
    generate,
    replication_seed,
)
from .parametric import FitOptions, FitResult, ParamVector, fit
from .semiparametric import (
    CdfGrid,
    GridInversionConfig,
    GridInversionResult,
    KernelConfig,
    SieveConfig,
    SieveResult,
    grid_inversion_fit,
    interpolate,
    kernel_smoothing_fit,
    read_grid_csv,
    read_grid_json,
    sieve_mle_fit,
    write_grid_csv,
    write_grid_json,
)
from .diagnostics import (
    LEVELS,
    IdentificationReport,
    RhoConditionFlags,
    ShiftAttainment,
    check_coverage,
    check_exclusive_shift,
    check_rank,
    check_rho_conditions,
    check_threshold_gap_overlap,
    classify,
    format_report,
)
from .metrics import (
    MetricsReport,
    aggregate_metrics,
    evaluate,
    read_metrics_csv,
    write_metrics_csv,
    write_metrics_summary_csv,
)

__version__ = "0.1.0"
