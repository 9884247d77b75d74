"""Gap distributions of superposed renewal traffic streams.

A multi-lane or disorderly stream is modelled as the superposition of ``L``
independent renewal processes. The gap between successive vehicles of the
merged stream then follows a closed-form distribution built from the
component headway laws and their equilibrium residuals.
"""

__version__ = "0.1.0"

from .diagnostics import DensityTable, GofResult, RenewalTestResult, density_table, ks_gof, renewal_test
from .distributions import (
    Exponential,
    Family,
    Gamma,
    HeadwayModel,
    LogLogistic,
    headway_eval,
    make_headway_model,
    sample_headways,
)
from .errors import DataError, DomainError, FitError, GapflowError, NumericError
from .estimation import (
    FitReport,
    OptimizerOptions,
    build_model_from_headway_fits,
    fit_gaps,
    fit_headways,
    loglik_gaps,
    loglik_headways,
    select_L,
)
from .io import load_model, read_arrivals, read_gaps, save_model, write_arrivals, write_gaps
from .residual import ResidualView, residual_cdf, residual_cdf_quadrature, residual_pdf
from .simulation import (
    ArrivalTimeline,
    GapSample,
    gaps_from_arrivals,
    simulate_arrivals,
    simulate_component,
    simulate_superposed,
)
from .superposition import SuperposedGapModel, combined_residual, exponential_gap_cdf, gap_cdf, gap_pdf
