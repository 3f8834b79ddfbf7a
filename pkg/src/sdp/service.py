"""HTTP what-if API over a loaded engine configuration.

The service is read-only with respect to configuration: governance edits
arrive as request-scoped overrides and never mutate the canonical
document.  Every response embeds the config hash it was computed under
(what-if responses embed both the base and the merged hash) and, where
randomness is involved, the seed used.  Domain infeasibility is a 422
with a structured conflict report; malformed bodies are 400; 500 is
reserved for genuine bugs.
"""

from __future__ import annotations

import threading
from collections import OrderedDict

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import EngineConfig, merge_overrides
from .core import Portfolio, check_constraints, validate_portfolio
from .errors import ConfigurationError, InfeasibleError
from .frontier import SamplerConfig, build_frontier
from .optimizer import optimize, whatif
from .pipeline import generate_reports
from .reporting import dumps_artifact
from .returns import EvaluationCache, evaluate_return
from .risk import full_risk_summary

MEMO_CAP = 100_000
FRONTIER_CANDIDATE_CAP = 50_000


class SamplerSpec(BaseModel):
    method: str = "dirichlet"
    seed: int
    count: int | None = 500
    resolution: int | None = 20
    concentration: float = 1.0

    def to_config(self) -> SamplerConfig:
        if self.method == "grid":
            return SamplerConfig(method="grid", seed=self.seed, resolution=self.resolution)
        return SamplerConfig(
            method="dirichlet", seed=self.seed, count=self.count,
            concentration=self.concentration,
        )


class EvaluateRequest(BaseModel):
    weights: list[float]
    seed: int = 0


class FrontierRequest(BaseModel):
    sampler: SamplerSpec
    workers: int = 1


class OptimizeRequest(BaseModel):
    solver: str = "auto"
    budget: int = 20_000
    seed: int = 0
    overrides: dict = Field(default_factory=dict)


class AttributionRequest(BaseModel):
    method: str = "exact"
    permutations: int = 2_000
    seed: int = 0
    weights: list[float] | None = None


class WhatifRequest(BaseModel):
    overrides: dict = Field(default_factory=dict)
    solver: str = "auto"
    budget: int = 20_000
    seed: int = 0
    sampler: SamplerSpec | None = None


class ReportRequest(BaseModel):
    seed: int = 0
    solver: str = "auto"
    budget: int = 20_000
    sampler: SamplerSpec | None = None
    top_k: int = 3
    decision_context: str = "automated decision reference"
    issued_at: str | None = None
    as_files: bool = False


class _MemoCache:
    """LRU keyed by (config hash, quantized weights) for repeated what-ifs."""

    def __init__(self, cap: int = MEMO_CAP):
        self._data: OrderedDict[tuple, object] = OrderedDict()
        self._cap = cap
        self._lock = threading.Lock()

    def get(self, key: tuple):
        with self._lock:
            hit = self._data.get(key)
            if hit is not None:
                self._data.move_to_end(key)
            return hit

    def put(self, key: tuple, value) -> None:
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self._cap:
                self._data.popitem(last=False)


def _merged(config: EngineConfig, overrides: dict) -> EngineConfig:
    return merge_overrides(config, overrides) if overrides else config


def create_app(
    config: EngineConfig,
    candidate_cap: int = FRONTIER_CANDIDATE_CAP,
    memo_cap: int = MEMO_CAP,
) -> FastAPI:
    app = FastAPI(title="data-portfolio-engine", version="1.0")
    memo = _MemoCache(memo_cap)

    def _check_sampler(sampler: SamplerConfig) -> SamplerConfig:
        if sampler.method == "dirichlet" and sampler.count > candidate_cap:
            raise ConfigurationError(
                f"candidate count {sampler.count} exceeds the service cap "
                f"{candidate_cap}"
            )
        return sampler

    @app.exception_handler(RequestValidationError)
    async def _malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request",
                                                      "detail": exc.errors()})

    @app.exception_handler(InfeasibleError)
    async def _infeasible(request: Request, exc: InfeasibleError):
        return JSONResponse(status_code=422, content=exc.as_dict())

    @app.exception_handler(ConfigurationError)
    async def _bad_config(request: Request, exc: ConfigurationError):
        return JSONResponse(status_code=400, content={"error": "configuration",
                                                      "message": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "config_hash": config.config_hash}

    @app.get("/catalog")
    def catalog():
        return {
            "config_hash": config.config_hash,
            "version": config.catalog.version,
            "categories": [
                {
                    "id": c.id,
                    "name": c.name,
                    "fairness_score": c.fairness_score,
                    "provenance_score": c.provenance_score,
                    "robustness_score": c.robustness_score,
                    "groups": sorted(c.groups),
                    "supplier_group": c.supplier_group,
                    "risk_weight": c.risk_weight,
                }
                for c in config.catalog.categories
            ],
        }

    @app.get("/constraints")
    def constraints():
        return {"config_hash": config.config_hash,
                "constraints": dict(config.raw.get("constraints", {}))}

    @app.post("/evaluate")
    def evaluate(req: EvaluateRequest):
        key = ("evaluate", config.config_hash, EvaluationCache.key(req.weights), req.seed)
        hit = memo.get(key)
        if hit is not None:
            return hit
        portfolio = Portfolio(tuple(req.weights), config.catalog.version)
        problems = validate_portfolio(portfolio, config.catalog)
        if problems:
            raise ConfigurationError(
                "invalid portfolio: " + "; ".join(v.message for v in problems)
            )
        summary = full_risk_summary(
            portfolio, config.catalog, config.policy, config.scenarios, seed=req.seed
        )
        violations = check_constraints(
            portfolio, config.constraints, config.catalog, summary
        )
        body = {
            "config_hash": config.config_hash,
            "seed": req.seed,
            "mu": evaluate_return(config.model, portfolio, config.catalog),
            "risk": summary.as_dict(),
            "violations": [v.as_dict() for v in violations],
            "feasible": not violations,
        }
        memo.put(key, body)
        return body

    @app.post("/frontier")
    def frontier(req: FrontierRequest):
        sampler = _check_sampler(req.sampler.to_config())
        result = build_frontier(
            config.constraints, config.catalog, config.policy, config.model,
            sampler, workers=req.workers,
        )
        doc = result.as_dict()
        doc["config_hash"] = config.config_hash
        doc["seed"] = sampler.seed
        return doc

    solve_cache = _MemoCache(256)

    def _solve_cached(cfg: EngineConfig, solver: str, budget_: int, seed: int):
        key = ("solve", cfg.config_hash, solver, budget_, seed)
        hit = solve_cache.get(key)
        if hit is not None:
            return hit
        result = optimize(
            cfg.model, cfg.constraints, cfg.catalog, cfg.policy,
            solver=solver, budget=budget_, seed=seed, scenarios=cfg.scenarios,
        )
        solve_cache.put(key, result)
        return result

    @app.post("/optimize")
    def optimize_endpoint(req: OptimizeRequest):
        merged = _merged(config, req.overrides)
        result = _solve_cached(merged, req.solver, req.budget, req.seed)
        doc = result.as_dict()
        doc["config_hash"] = merged.config_hash
        doc["base_config_hash"] = config.config_hash
        return doc

    @app.post("/attribution")
    def attribution(req: AttributionRequest):
        from .attribution import shapley_exact, shapley_montecarlo

        if req.weights is not None:
            portfolio = Portfolio(tuple(req.weights), config.catalog.version)
        else:
            portfolio = optimize(
                config.model, config.constraints, config.catalog, config.policy,
                seed=req.seed, scenarios=config.scenarios,
            ).portfolio
        if req.method == "exact":
            result = shapley_exact(config.model, portfolio, config.catalog)
        elif req.method == "monte-carlo":
            result = shapley_montecarlo(
                config.model, portfolio, config.catalog, req.permutations, req.seed
            )
        else:
            raise ConfigurationError(f"unknown attribution method {req.method!r}")
        doc = result.as_dict()
        doc["config_hash"] = config.config_hash
        doc["weights"] = list(portfolio.weights)
        return doc

    @app.post("/whatif")
    def whatif_endpoint(req: WhatifRequest):
        merged = _merged(config, req.overrides)
        base_result = _solve_cached(config, req.solver, req.budget, req.seed)
        result = whatif(
            config.model,
            config.constraints,
            config.catalog,
            config.policy,
            cs=merged.constraints,
            policy=merged.policy,
            solver=req.solver,
            budget=req.budget,
            seed=req.seed,
            scenarios=merged.scenarios,
            sampler=_check_sampler(req.sampler.to_config()) if req.sampler else None,
            base_result=base_result,
        )
        doc = result.as_dict()
        doc["config_hash"] = merged.config_hash
        doc["base_config_hash"] = config.config_hash
        doc["seed"] = req.seed
        return doc

    @app.post("/report")
    def report(req: ReportRequest):
        bundle = generate_reports(
            config, seed=req.seed, solver=req.solver, budget=req.budget,
            sampler=req.sampler.to_config() if req.sampler else None,
            top_k=req.top_k, decision_context=req.decision_context,
            issued_at=req.issued_at,
        )
        if req.as_files:
            return {
                "config_hash": config.config_hash,
                "files": {name: dumps_artifact(doc)
                          for name, doc in bundle.documents().items()},
            }
        return {
            "config_hash": config.config_hash,
            "dps": bundle.statement,
            "dpc": bundle.card,
            "cpr": bundle.consumer_report,
        }

    return app
