"""Unified JSON configuration document shared by the CLI and the service.

One file carries the catalog, policy parameters, constraint envelope,
return model, scenario set, and shift set.  Loading validates every
cross-reference (ids, coefficient coverage, probability mass, band
consistency) and probes weight-space feasibility, so downstream code can
assume a loadable config is workable.  Hashes are over canonical JSON
(sorted keys, compact separators) for stable audit joins.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .core import (
    AggregateCap,
    Band,
    CategoryCatalog,
    ComponentCaps,
    ConstraintSet,
    DataCategory,
    GroupBound,
    PolicyParameters,
    ensure_feasible,
)
from .errors import ConfigurationError
from .returns import ReturnModel, Scenario, ShiftOperator, validate_scenario_set


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def canonical_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


# ---------------------------------------------------------------------------
# Parsers (JSON fragments -> domain objects)
# ---------------------------------------------------------------------------


def parse_catalog(doc: Mapping) -> CategoryCatalog:
    cats = []
    for entry in doc.get("categories", []):
        cats.append(
            DataCategory(
                id=entry["id"],
                name=entry.get("name", entry["id"]),
                fairness_score=float(entry["fairness_score"]),
                provenance_score=float(entry["provenance_score"]),
                robustness_score=float(entry["robustness_score"]),
                groups=frozenset(entry.get("groups", [])),
                supplier_group=entry.get("supplier_group", ""),
                risk_weight=float(entry.get("risk_weight", 0.0)),
                return_params=dict(entry.get("return_params", {})),
                rationale=entry.get("rationale", ""),
                lineage=dict(entry.get("lineage", {})),
            )
        )
    return CategoryCatalog(
        tuple(cats), version=doc.get("version", ""), created_at=doc.get("created_at", "")
    )


def parse_policy(doc: Mapping) -> PolicyParameters:
    return PolicyParameters(
        alpha=float(doc["alpha"]),
        beta=float(doc["beta"]),
        gamma=float(doc["gamma"]),
        cvar_eta=None if doc.get("cvar_eta") is None else float(doc["cvar_eta"]),
    )


def parse_constraints(doc: Mapping) -> ConstraintSet:
    bands = {
        cid: Band(float(b.get("lower", 0.0)), float(b.get("upper", 1.0)))
        for cid, b in doc.get("bands", {}).items()
    }
    group_bounds = tuple(
        GroupBound(
            group=g["group"],
            lower=None if g.get("lower") is None else float(g["lower"]),
            upper=None if g.get("upper") is None else float(g["upper"]),
        )
        for g in doc.get("group_bounds", [])
    )
    aggregate_caps = tuple(
        AggregateCap(frozenset(c["categories"]), float(c["bound"]))
        for c in doc.get("aggregate_caps", [])
    )
    caps_doc = doc.get("component_caps")
    component_caps = None
    if caps_doc is not None:
        component_caps = ComponentCaps(
            fairness=None if caps_doc.get("fairness") is None else float(caps_doc["fairness"]),
            provenance=None
            if caps_doc.get("provenance") is None
            else float(caps_doc["provenance"]),
            robustness=None
            if caps_doc.get("robustness") is None
            else float(caps_doc["robustness"]),
        )
    return ConstraintSet(
        prohibited=frozenset(doc.get("prohibited", [])),
        aggregate_caps=aggregate_caps,
        bands=bands,
        group_bounds=group_bounds,
        risk_cap=None if doc.get("risk_cap") is None else float(doc["risk_cap"]),
        cvar_cap=None if doc.get("cvar_cap") is None else float(doc["cvar_cap"]),
        concentration_limits={
            k: float(v) for k, v in doc.get("concentration_limits", {}).items()
        },
        drwa_budget=None if doc.get("drwa_budget") is None else float(doc["drwa_budget"]),
        stress_caps={k: float(v) for k, v in doc.get("stress_caps", {}).items()},
        component_caps=component_caps,
    )


def parse_return_model(
    doc: Mapping,
    external_evaluators: Mapping[str, Callable] | None = None,
) -> ReturnModel:
    kind = doc.get("kind", "linear")
    if kind == "external":
        registry = external_evaluators or {}
        name = doc.get("evaluator", "")
        if name not in registry:
            raise ConfigurationError(
                f"external evaluator {name!r} is not registered with the loader"
            )
        return ReturnModel(
            kind="external",
            baseline=float(doc.get("baseline", 0.0)),
            evaluator=registry[name],
            model_id=doc.get("id", f"external:{name}"),
        )
    if kind == "linear":
        params = {cid: {"m": float(v)} for cid, v in doc.get("coefficients", {}).items()}
        return ReturnModel(
            kind="linear", baseline=float(doc.get("baseline", 0.0)),
            parameters=params, model_id=doc.get("id", ""),
        )
    if kind == "log-saturating":
        params = {
            cid: {"a": float(v["a"]), "b": float(v["b"])}
            for cid, v in doc.get("coefficients", {}).items()
        }
        return ReturnModel(
            kind="log-saturating", baseline=float(doc.get("baseline", 0.0)),
            parameters=params, model_id=doc.get("id", ""),
        )
    if kind == "quadratic-interaction":
        params = {cid: {"m": float(v)} for cid, v in doc.get("coefficients", {}).items()}
        return ReturnModel(
            kind="quadratic-interaction",
            baseline=float(doc.get("baseline", 0.0)),
            parameters=params,
            interaction={
                ci: {cj: float(q) for cj, q in row.items()}
                for ci, row in doc.get("interaction", {}).items()
            },
            model_id=doc.get("id", ""),
        )
    raise ConfigurationError(f"unknown return-model kind {kind!r}")


def parse_scenarios(docs: Sequence[Mapping]) -> tuple[Scenario, ...]:
    return tuple(
        Scenario(
            id=d["id"],
            probability=float(d["probability"]),
            score_deltas={
                cid: {k: float(v) for k, v in named.items()}
                for cid, named in d.get("score_deltas", {}).items()
            },
            coefficient_deltas={
                cid: {k: float(v) for k, v in named.items()}
                for cid, named in d.get("coefficient_deltas", {}).items()
            },
        )
        for d in docs
    )


def parse_shifts(docs: Sequence[Mapping]) -> tuple[ShiftOperator, ...]:
    return tuple(
        ShiftOperator(id=d["id"], kind=d["kind"], params=dict(d.get("params", {})))
        for d in docs
    )


# ---------------------------------------------------------------------------
# Engine configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EngineConfig:
    catalog: CategoryCatalog
    policy: PolicyParameters
    constraints: ConstraintSet
    model: ReturnModel
    scenarios: tuple[Scenario, ...]
    shifts: tuple[ShiftOperator, ...]
    raw: Mapping
    config_hash: str
    governance_hash: str  # catalog + constraints + policy only (audit joins)
    external_evaluators: Mapping[str, Callable] | None = None


def _validate_model_coverage(model: ReturnModel, catalog: CategoryCatalog) -> None:
    if model.kind == "external":
        return
    needed = {"linear": ("m",), "log-saturating": ("a", "b"),
              "quadratic-interaction": ("m",)}[model.kind]
    for cid in catalog.ids:
        params = model.parameters.get(cid)
        missing = [n for n in needed if params is None or n not in params]
        if missing:
            raise ConfigurationError(
                f"return model does not cover category {cid!r} (missing {missing})"
            )
    for ci, row in model.interaction.items():
        for cj in [ci, *row]:
            if cj not in catalog.index:
                raise ConfigurationError(
                    f"interaction matrix references unknown category {cj!r}"
                )


def load_config(
    source: str | Path | Mapping,
    external_evaluators: Mapping[str, Callable] | None = None,
) -> EngineConfig:
    """Parse, cross-validate, and feasibility-probe a configuration document."""
    if isinstance(source, (str, Path)):
        try:
            raw = json.loads(Path(source).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    else:
        raw = dict(source)
    for key in ("catalog", "policy"):
        if key not in raw:
            raise ConfigurationError(f"config is missing required section {key!r}")

    catalog = parse_catalog(raw["catalog"])
    policy = parse_policy(raw["policy"])
    constraints = parse_constraints(raw.get("constraints", {}))
    model = parse_return_model(raw.get("return_model", {"kind": "linear"}), external_evaluators)
    scenarios = parse_scenarios(raw.get("scenarios", []))
    shifts = parse_shifts(raw.get("shifts", []))

    constraints.validate_against(catalog)
    _validate_model_coverage(model, catalog)
    validate_scenario_set(scenarios, catalog)
    if constraints.cvar_cap is not None:
        if policy.cvar_eta is None:
            raise ConfigurationError("cvar_cap requires policy.cvar_eta")
        if not scenarios:
            raise ConfigurationError("cvar_cap requires a scenario set to evaluate")
    scenario_ids = {s.id for s in scenarios}
    for sid in constraints.stress_caps:
        if sid not in scenario_ids:
            raise ConfigurationError(f"stress cap references unknown scenario {sid!r}")
    for shift in shifts:
        deltas = shift.params.get("deltas", {})
        if isinstance(deltas, Mapping):
            for cid in deltas:
                if cid not in catalog.index:
                    raise ConfigurationError(
                        f"shift {shift.id!r} references unknown category {cid!r}"
                    )
        for key in ("source", "target"):
            cid = shift.params.get(key)
            if cid is not None and cid not in catalog.index:
                raise ConfigurationError(
                    f"shift {shift.id!r} references unknown category {cid!r}"
                )
    ensure_feasible(constraints, catalog)

    governance = {k: raw.get(k) for k in ("catalog", "constraints", "policy")}
    return EngineConfig(
        catalog=catalog,
        policy=policy,
        constraints=constraints,
        model=model,
        scenarios=scenarios,
        shifts=shifts,
        raw=raw,
        config_hash=canonical_hash(raw),
        governance_hash=canonical_hash(governance),
        external_evaluators=external_evaluators,
    )


# ---------------------------------------------------------------------------
# Override merging (what-if requests)
# ---------------------------------------------------------------------------


def merge_overrides(config: EngineConfig, overrides: Mapping) -> EngineConfig:
    """New config with partial constraint/policy overrides folded in.

    Scalar fields replace the base value (JSON null clears an optional
    cap); ``bands``, ``concentration_limits`` and ``stress_caps`` merge
    per key; list-valued fields replace wholesale.  The merged document
    revalidates from scratch, so an infeasible override set raises the
    structured InfeasibleError.
    """
    unknown = set(overrides) - {"constraints", "policy"}
    if unknown:
        raise ConfigurationError(f"override sections not recognized: {sorted(unknown)}")
    raw = json.loads(json.dumps(dict(config.raw)))  # deep copy via JSON round-trip
    cons = raw.setdefault("constraints", {})
    for key, value in dict(overrides.get("constraints", {})).items():
        if key in ("bands", "concentration_limits", "stress_caps"):
            merged = dict(cons.get(key, {}))
            for k, v in value.items():
                if v is None:
                    merged.pop(k, None)
                else:
                    merged[k] = v
            cons[key] = merged
        else:
            cons[key] = value
    pol = raw.setdefault("policy", {})
    for key, value in dict(overrides.get("policy", {})).items():
        pol[key] = value
    return load_config(raw, external_evaluators=config.external_evaluators)
