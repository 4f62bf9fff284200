"""Bayesian monotone multiple regression over region lattices.

Piecewise-constant monotone regression surfaces per region, represented as
marked point processes and sampled by a reversible-jump algorithm, with
between-region smoothing through a discrepancy-penalized joint prior and
cross-validated Bayesian optimization of the smoothing strength.
"""

from .analysis import (
    GridEstimate,
    ThresholdReport,
    detect_thresholds,
    grid_summary,
    mae_sd,
    variable_relevance,
)
from .discrepancy import dpq, dpq_delta, integrand, prior_log_ratio
from .domain import (
    BINOMIAL,
    GAUSSIAN,
    INTERSECTION,
    UNION,
    BaselineSpec,
    CovariateBox,
    Dataset,
    LikelihoodSpec,
    PriorConfig,
    Problem,
    RegionData,
    RegionGraph,
    load_problem,
    problem_from_config,
    read_region_csv,
    validate_problem,
    write_region_csv,
)
from .egocv import CvConfig, cv_objective, ego_cv, expected_improvement, gp_fit, make_folds
from .errors import BsmmrError, ValidationError
from .likelihood import (
    NuisanceState,
    gibbs_update_sigma2,
    initial_nuisance,
    log_likelihood,
    log_likelihood_delta,
    mh_update_alpha,
    predictive_mean,
    predictive_mean_many,
)
from .rjmcmc import (
    BIRTH,
    DEATH,
    SHIFT,
    Chain,
    SamplerSchedule,
    SamplerState,
    acceptance_log_ratio,
    initial_state,
    load_checkpoint,
    propose,
    run,
    save_checkpoint,
    step,
)
from .selftest import run_selftest
from .simulate import TrueFunction, builtin_networks, gen_binomial, gen_gaussian
from .surface import (
    MonotoneSurface,
    changed_region,
    constant_surface,
    random_monotone_surface,
    subprocess_masks,
)

__version__ = "0.1.0"

__all__ = [
    "BINOMIAL",
    "BIRTH",
    "BaselineSpec",
    "BsmmrError",
    "Chain",
    "CovariateBox",
    "CvConfig",
    "DEATH",
    "Dataset",
    "GAUSSIAN",
    "GridEstimate",
    "INTERSECTION",
    "LikelihoodSpec",
    "MonotoneSurface",
    "NuisanceState",
    "PriorConfig",
    "Problem",
    "RegionData",
    "RegionGraph",
    "SHIFT",
    "SamplerSchedule",
    "SamplerState",
    "ThresholdReport",
    "TrueFunction",
    "UNION",
    "ValidationError",
    "acceptance_log_ratio",
    "builtin_networks",
    "changed_region",
    "constant_surface",
    "cv_objective",
    "detect_thresholds",
    "dpq",
    "dpq_delta",
    "ego_cv",
    "expected_improvement",
    "gen_binomial",
    "gen_gaussian",
    "gibbs_update_sigma2",
    "gp_fit",
    "grid_summary",
    "initial_nuisance",
    "initial_state",
    "integrand",
    "load_checkpoint",
    "load_problem",
    "log_likelihood",
    "log_likelihood_delta",
    "mae_sd",
    "make_folds",
    "mh_update_alpha",
    "predictive_mean",
    "predictive_mean_many",
    "prior_log_ratio",
    "problem_from_config",
    "propose",
    "random_monotone_surface",
    "read_region_csv",
    "run",
    "run_selftest",
    "save_checkpoint",
    "step",
    "subprocess_masks",
    "validate_problem",
    "variable_relevance",
    "write_region_csv",
]
