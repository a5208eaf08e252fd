"""Superiorization of string-averaging projection methods for convex feasibility problems."""

from .convex_sets import (TAU_DIST, Ball, Box, ConstraintFamily, ConstraintSet, ContractViolation, Halfspace,
                          Hyperplane, distance, project, proximity)
from .objectives import (TAU_GRAD, L1Norm, Constant, Objective, SquaredL2, TV2D, evaluate, is_nonascending,
                         negative_normalized_subgradient, subgradient)
from .string_projection import (DSAPOperator, FixedPlanSequence, PlanSequence, RandomPlanSequence, StringPlan,
                                apply_string, basic_algorithm, dsap_apply, make_cimmino_plan, make_kaczmarz_plan)
from .superiorize import (PerturbationSchedule, RunTrace, StrongConfig, WeakConfig, basic_run,
                          check_bounded_perturbation_resilience, check_fejer_decrement, epsilon_output,
                          first_epsilon_index, strong_superiorized_run, weak_superiorized_run)

__version__ = "0.1.0"
