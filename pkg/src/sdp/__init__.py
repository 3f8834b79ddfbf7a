"""Governance-aware data portfolio engine.

Scores data-category mixtures for informational return and
governance-adjusted risk, builds governance-efficient frontiers, solves
risk-capped allocation problems under regulatory constraint sets,
attributes value to categories, and emits the three audit artifacts
(statement, card, consumer report) behind a CLI and an HTTP what-if API.
"""

from .attribution import AttributionResult, shapley_exact, shapley_montecarlo
from .core import (
    AggregateCap,
    Band,
    CategoryCatalog,
    ComponentCaps,
    ConstraintSet,
    DataCategory,
    GroupBound,
    PolicyParameters,
    Portfolio,
    Violation,
    binding_constraints,
    check_constraints,
    constraint_status,
    ensure_feasible,
    project_to_feasible,
    validate_portfolio,
)
from .errors import ConfigurationError, InfeasibleError, SdpError
from .frontier import (
    CandidatePoint,
    FrontierResult,
    SamplerConfig,
    build_frontier,
    fit_upper_envelope,
    pareto_filter,
    sample_candidates,
)
from .optimizer import (
    OptimizationResult,
    WhatifResult,
    optimize,
    optimize_blackbox,
    optimize_cvar_constrained,
    optimize_exact,
    risk_parity_baseline,
    whatif,
)
from .returns import (
    ReturnModel,
    Scenario,
    ShiftOperator,
    apply_shift,
    evaluate_return,
    evaluate_subset_return,
)
from .risk import (
    RiskSummary,
    aggregate_components,
    composite_risk,
    cvar_risk,
    drwa,
    expected_shortfall,
    expected_shortfall_minform,
    robustness_volatility,
    stress_evaluate,
)

__version__ = "0.1.0"
