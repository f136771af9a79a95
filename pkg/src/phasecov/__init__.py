"""Phase-covariant cloning of coherent states: fidelities, optimization, Monte Carlo."""

__version__ = "0.1.0"

from .fidelity import (  # noqa: E402
    SCHEMES,
    FeedforwardParams,
    FidelityResult,
    SchemeConfig,
    fid_cl_dh,
    fid_cl_sg,
    fid_ff_dh,
    fid_ff_sg,
    fid_gaussian_benchmark,
    fid_quadrature,
    scheme_config,
    series_fidelity,
)
from .optimizer import OptimumReport, optimize_ff, sweep_alpha, sweep_m  # noqa: E402
from .phasedist import IDEAL, MeasurementModel, SeriesControl  # noqa: E402
from .simulator import EstimateResult, simulate  # noqa: E402
