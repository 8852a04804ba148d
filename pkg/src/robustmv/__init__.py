"""High-breakdown robust multivariate estimation and outlier diagnostics.

Estimators: minimum covariance determinant location/scatter, least trimmed
squares regression, robust multivariate regression, robust discriminant
analysis, robust principal components, and robust calibration (PCR / PLS)
with cross-validated component selection.  Each robust fit doubles as an
outlier detector through its distance diagnostics and plot-ready outlier
maps.
"""

from .bruteforce import (
    ContaminationSpec,
    breakdown_probe,
    contaminate,
    exact_lts,
    exact_mcd,
)
from .calibration import CvCurve, PcrModel, PlsModel, rmsecv, rpcr, rsimpls, simpls
from .dataset import Dataset, LocationScatter, default_h, validate
from .diagnostics import (
    DiagnosticTable,
    OutlierMap,
    dd_plot_table,
    index_distance_table,
)
from .discriminant import GroupModel, classify, discriminant_scores, fit_rlda, fit_rqda
from .lts import LtsFit, fast_lts, lts_scale, regression_outlier_map, reweight_lts
from .mcd import (
    McdConfig,
    McdResult,
    c_step,
    consistency_factor,
    fast_mcd,
    initial_subsets,
    mahalanobis_distances,
    reweight_mcd,
    robust_distances,
)
from .mvreg import MvRegFit, mcd_regression, mvreg_outlier_map, reweight_mvreg
from .robpca import (
    PcaModel,
    od_cutoff,
    orthogonal_distances,
    outlyingness,
    pca_outlier_map,
    robpca,
    score_distances,
    scores,
)
from .univariate import (
    UniEstimate,
    chi2_cdf,
    chi2_quantile,
    mad,
    median,
    normal_quantile,
    univariate_mcd,
)

__version__ = "0.1.0"

__all__ = [
    "ContaminationSpec",
    "CvCurve",
    "Dataset",
    "DiagnosticTable",
    "GroupModel",
    "LocationScatter",
    "LtsFit",
    "McdConfig",
    "McdResult",
    "MvRegFit",
    "OutlierMap",
    "PcaModel",
    "PcrModel",
    "PlsModel",
    "UniEstimate",
    "breakdown_probe",
    "c_step",
    "chi2_cdf",
    "chi2_quantile",
    "classify",
    "consistency_factor",
    "contaminate",
    "dd_plot_table",
    "default_h",
    "discriminant_scores",
    "exact_lts",
    "exact_mcd",
    "fast_lts",
    "fast_mcd",
    "fit_rlda",
    "fit_rqda",
    "index_distance_table",
    "initial_subsets",
    "lts_scale",
    "mad",
    "mahalanobis_distances",
    "mcd_regression",
    "median",
    "mvreg_outlier_map",
    "normal_quantile",
    "od_cutoff",
    "orthogonal_distances",
    "outlyingness",
    "pca_outlier_map",
    "regression_outlier_map",
    "reweight_lts",
    "reweight_mcd",
    "reweight_mvreg",
    "rmsecv",
    "robpca",
    "robust_distances",
    "rpcr",
    "rsimpls",
    "score_distances",
    "scores",
    "simpls",
    "univariate_mcd",
    "validate",
]
