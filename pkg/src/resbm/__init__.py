"""Random effects stochastic block models for samples of networks.

Joint community detection across a sample of networks on a shared node
set: simulation, variational EM and two-step matrix-factorization
estimators, permutation tests for group differences, and prediction for
held-out subjects.
"""

from .baselines import ind_spectral, mean_spectral, spectral_k, spectral_single
from .estimators import ResbmEstimator, TwoPopulationClassifier
from .errors import (
    EstimationError,
    InferenceError,
    IOFormatError,
    ResbmError,
    ValidationError,
)
from .fitting import METHODS, fit_resbm, fit_spectralk
from .graphs import degrees, density, laplacian, threshold_correlation
from .inference import (
    TestResult,
    adjust_pvalues,
    muv_node_statistic,
    muv_statistic,
    permutation_test,
    sine_statistic,
)
from .metrics import (
    align_fit,
    align_labels,
    correct_classification_rate,
    module_consistency,
    nmi,
    roc_auc,
    t_error,
    t_median_abs,
)
from .predict import (
    Classification,
    assignment_covariance,
    classify_subject,
    expected_assignment,
    prediction_error,
)
from .simulate import (
    SimConfig,
    draw_block_params,
    draw_edges,
    draw_zbar,
    perturb_members,
    simulate,
)
from .twostep import (
    FactorState,
    co_osntf_objective,
    conditional_mle,
    fit_co_osntf,
    fit_co_spectral,
    osntf_single,
    update_s,
    update_u_member,
    update_u_star,
)
from .types import (
    BlockParams,
    HardAssignment,
    NetworkSample,
    ResbmFit,
    SoftAssignment,
    TransitionMatrix,
    as_network_sample,
)
from .varem import VariationalState, bernoulli_kernel, elbo, fit_varem, m_step, ve_step

__version__ = "0.1.0"

__all__ = [
    "BlockParams",
    "Classification",
    "EstimationError",
    "FactorState",
    "HardAssignment",
    "InferenceError",
    "IOFormatError",
    "METHODS",
    "NetworkSample",
    "ResbmError",
    "ResbmEstimator",
    "ResbmFit",
    "SimConfig",
    "SoftAssignment",
    "TestResult",
    "TransitionMatrix",
    "TwoPopulationClassifier",
    "ValidationError",
    "VariationalState",
    "adjust_pvalues",
    "align_fit",
    "align_labels",
    "as_network_sample",
    "assignment_covariance",
    "bernoulli_kernel",
    "classify_subject",
    "co_osntf_objective",
    "conditional_mle",
    "correct_classification_rate",
    "degrees",
    "density",
    "draw_block_params",
    "draw_edges",
    "draw_zbar",
    "elbo",
    "expected_assignment",
    "fit_co_osntf",
    "fit_co_spectral",
    "fit_resbm",
    "fit_spectralk",
    "fit_varem",
    "ind_spectral",
    "laplacian",
    "m_step",
    "mean_spectral",
    "module_consistency",
    "muv_node_statistic",
    "muv_statistic",
    "nmi",
    "osntf_single",
    "permutation_test",
    "perturb_members",
    "prediction_error",
    "roc_auc",
    "simulate",
    "sine_statistic",
    "spectral_k",
    "spectral_single",
    "t_error",
    "t_median_abs",
    "threshold_correlation",
    "update_s",
    "update_u_member",
    "update_u_star",
    "ve_step",
]
