"""Fixed-confidence identification of the exact Pareto-optimal arm set in
multi-objective bandits ordered by a polyhedral preference cone."""

from .cones import (
    PreferenceCone,
    cone_contains,
    cone_from_dict,
    cone_to_dict,
    dominates,
    dual_generators,
    make_angle_cone,
    orthant_cone,
    polar_contains,
)
from .fw import FwState, build_subdifferential, fw_update, optimize_allocation, solve_maximin
from .harness import (
    ExperimentSpec,
    covboost_instance,
    error_curve,
    gaussian_rho_instance,
    load_instance,
    run_batch,
    runtime_scaling,
)
from .model import BanditInstance, EstimatorState, in_model_class, sample
from .objective import (
    GaussianProjectedKL,
    big_f,
    characteristic_time_inverse,
    delta_policy,
    gaussian_pair_value,
    min_over_z,
    pair_gradient,
    polar_vector,
    threshold,
)
from .pareto import CandidatePairs, ParetoSet, candidate_pairs, pareto_set
from .runner import (
    RunConfig,
    RunResult,
    c_tracking_arm,
    forced_exploration_due,
    glrt_statistic,
    run,
    stopping_check,
)

__version__ = "0.1.0"
