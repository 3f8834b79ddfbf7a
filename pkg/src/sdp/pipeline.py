"""End-to-end report generation shared by the CLI and the HTTP service.

Runs optimize -> frontier -> attribution -> stress over a loaded config
and assembles the three artifacts.  Fully deterministic for a fixed seed
and timestamp, which is what makes CLI output and service output
byte-comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .attribution import AttributionResult, shapley_exact, shapley_montecarlo
from .config import EngineConfig
from .frontier import FrontierResult, SamplerConfig, build_frontier
from .optimizer import OptimizationResult, optimize
from .reporting import generate_card, generate_consumer_report, generate_statement
from .risk import StressResult, stress_evaluate

DEFAULT_SAMPLER_COUNT = 500
DEFAULT_TOP_K = 3


@dataclass(frozen=True)
class ReportBundle:
    statement: dict
    card: dict
    consumer_report: dict
    optimization: OptimizationResult
    frontier: FrontierResult
    attribution: AttributionResult
    stress: StressResult

    def documents(self) -> dict[str, dict]:
        return {
            "dps.json": self.statement,
            "dpc.json": self.card,
            "cpr.json": self.consumer_report,
        }


def generate_reports(
    config: EngineConfig,
    seed: int,
    solver: str = "auto",
    budget: int = 20_000,
    sampler: SamplerConfig | None = None,
    attribution_method: str = "auto",
    permutations: int = 2_000,
    top_k: int = DEFAULT_TOP_K,
    decision_context: str = "automated decision reference",
    issued_at: str | None = None,
) -> ReportBundle:
    """Produce the full artifact bundle for a configuration."""
    if sampler is None:
        sampler = SamplerConfig(method="dirichlet", seed=seed, count=DEFAULT_SAMPLER_COUNT)
    opt = optimize(
        config.model, config.constraints, config.catalog, config.policy,
        solver=solver, budget=budget, seed=seed, scenarios=config.scenarios,
    )
    frontier = build_frontier(
        config.constraints, config.catalog, config.policy, config.model, sampler
    )
    if attribution_method == "auto":
        attribution_method = "exact" if len(config.catalog) <= 12 else "monte-carlo"
    if attribution_method == "exact":
        attribution = shapley_exact(config.model, opt.portfolio, config.catalog)
    else:
        attribution = shapley_montecarlo(
            config.model, opt.portfolio, config.catalog, permutations, seed
        )
    stress = stress_evaluate(
        opt.portfolio, config.catalog, config.policy, config.scenarios,
        config.model, config.constraints.stress_caps,
    )
    statement = generate_statement(
        config.catalog, config.constraints, config.policy, issued_at=issued_at
    )
    card = generate_card(
        opt,
        config.catalog,
        config.constraints,
        config.policy,
        model_id=config.model.model_id,
        stress=stress,
        frontier_reference={"seed": sampler.seed, "config_hash": config.governance_hash,
                            "sampler": sampler.as_dict()},
        governance_hash=config.governance_hash,
        issued_at=statement["issued_at"],
    )
    consumer = generate_consumer_report(
        card, attribution, k=top_k, decision_context=decision_context
    )
    return ReportBundle(
        statement=statement,
        card=card,
        consumer_report=consumer,
        optimization=opt,
        frontier=frontier,
        attribution=attribution,
        stress=stress,
    )
