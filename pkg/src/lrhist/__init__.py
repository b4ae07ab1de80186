"""Low-rank nonnegative tensor-factorized histogram density estimation."""

from .decomp import CPFactors, FitOptions, TuckerFactors, fit_prob_tensor, ncp_fit, ntd_fit
from .histogram import (
    HistogramDensity,
    bin_index,
    empirical_l2_risk,
    evaluate,
    histogram_from_data,
    l1_distance,
    l2_inner,
    sample_histogram,
    u_inverse,
    u_map,
)
from .models import (
    MarginalBank,
    MultiViewSpec,
    TuckerSpec,
    random_multiview_spec,
    random_tucker_spec,
    sample_multiview,
    sample_tucker,
    true_weight_tensor,
)
from .reduce import apply_unit_cube, fit_unit_cube, pca_reduce, random_reduce
from .select import SelectionResult, scheffe_set, select_density
from .stats import WilcoxonResult, wilcoxon_signed_rank
from .tensor import (
    cp_reconstruct,
    inner,
    l1_norm,
    mode_n_product,
    outer_product,
    project_simplex,
    tucker_reconstruct,
)
from .experiment import ExperimentConfig, ExperimentReport, cross_validate, run_experiment

__version__ = "0.1.0"
