"""Stock-rationing queue with two demand classes: analysis and policy optimization."""

__version__ = "0.1.0"

from .model import (
    ENUMERATION_CAP,
    BadThreshold,
    CapExceeded,
    DifferenceSet,
    InvalidOrder,
    LengthMismatch,
    NonPositiveRate,
    Policy,
    PriorityViolation,
    RewardStructure,
    StockRationingError,
    SystemParams,
    adjacent_chain,
    difference_set,
    enumerate_policies,
    reward_structure,
    service_rates,
    validate_params,
)
from .chain import (
    Generator,
    NumericalOverflow,
    ProfitLinearForm,
    StationaryDistribution,
    average_profit,
    build_generator,
    profit_linear_form,
    stationary_distribution,
)
from .poisson import (
    InconsistentTermination,
    IndexOutOfRange,
    PoissonSolution,
    RealizationFactors,
    SingularSystem,
    potential_for_reward,
    realization_factor_closed_form,
    realization_factors_from_potential,
    realization_factors_recurrence,
    solve_poisson,
    solve_poisson_normalized,
    thomas_solve,
)
from .sensitivity import (
    ClassPropertyReport,
    NotSingleFlip,
    PenaltyProfile,
    class_property_check,
    classify_sign,
    difference_general,
    difference_one_position,
    penalty_roots,
)
from .optimizer import (
    MonotoneChainReport,
    OptimizerResult,
    RegionClassification,
    TransformPlan,
    brute_force_optimal,
    classify_region,
    closed_form_profit_high,
    closed_form_profit_low,
    global_optimal,
    monotone_chain_check,
    optimal_high_penalty,
    optimal_low_penalty,
    restore_threshold,
    transform_plan,
)
from .staticpol import (
    StaticPolicy,
    ThresholdOptimalityReport,
    ThetaOutOfRange,
    build_static,
    optimal_static_threshold,
    static_profit_closed_form,
    threshold_optimality_check,
)
from .sim import SimEstimate, simulate
