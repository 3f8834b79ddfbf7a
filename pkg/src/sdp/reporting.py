"""The three audit artifacts and the filing lint.

Artifacts are plain JSON documents with fixed field names (schemas ship
in ``sdp/schemas``) and explicit schema versions, so filings diff and
round-trip byte-exactly.  The statement is public-facing and carries no
realized weights or raw scores; the card is the regulatory filing and
must recompute cleanly from its own weights; the consumer report speaks
in names and coarse buckets only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from types import SimpleNamespace
from typing import Mapping

import jsonschema

from .attribution import AttributionResult
from .config import canonical_hash
from .core import (
    CATALOG_VERSION,
    SCHEMA_ERROR,
    SELF_CONSISTENCY,
    UNKNOWN_CATEGORY,
    CategoryCatalog,
    ConstraintSet,
    PolicyParameters,
    Portfolio,
    Violation,
    check_constraints,
    constraint_status,
    validate_portfolio,
)
from .errors import ConfigurationError
from .optimizer import OptimizationResult
from .risk import StressResult, aggregate_components, drwa

SELF_CONSISTENCY_TOL = 1e-6

# Consumer-report quantization: weight bands in percent and attribution
# magnitude buckets as shares of total positive attribution.
WEIGHT_BAND_EDGES = ((0.50, "over 50%"), (0.25, "25-50%"), (0.10, "10-25%"))
WEIGHT_BAND_FLOOR = "under 10%"
MAGNITUDE_THRESHOLDS = (0.5, 0.15)


def _schema(name: str) -> dict:
    with resources.files("sdp.schemas").joinpath(name).open() as fh:
        return json.load(fh)


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def dumps_artifact(doc: Mapping) -> str:
    """Canonical on-disk encoding for artifacts (stable byte-for-byte)."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def generate_statement(
    catalog: CategoryCatalog,
    cs: ConstraintSet,
    policy: PolicyParameters,
    issued_at: str | None = None,
) -> dict:
    """Public statement: admissible categories, bands, and policy summary.

    Prohibited categories are dropped from the admissible list; realized
    weights and per-category scores never appear here.
    """
    cs.validate_against(catalog)
    lo, hi = cs.effective_bands(catalog)
    admissible = [
        {"id": c.id, "name": c.name, "groups": sorted(c.groups), "rationale": c.rationale}
        for c in catalog.categories
        if c.id not in cs.prohibited
    ]
    band_rows = [
        {"id": c.id, "lower": float(lo[catalog.index[c.id]]),
         "upper": float(hi[catalog.index[c.id]])}
        for c in catalog.categories
        if c.id not in cs.prohibited
    ]
    group_rows = [
        {"group": gb.group, "lower": gb.lower, "upper": gb.upper}
        for gb in cs.group_bounds
    ]
    return {
        "schema_version": "1.0",
        "artifact": "data_portfolio_statement",
        "catalog_version": catalog.version,
        "issued_at": issued_at or _now_iso(),
        "admissible_categories": admissible,
        "bands": {"categories": band_rows, "groups": group_rows},
        "policy": {
            "alpha": policy.alpha,
            "beta": policy.beta,
            "gamma": policy.gamma,
            "risk_cap": cs.risk_cap,
            "cvar_eta": policy.cvar_eta,
            "cvar_cap": cs.cvar_cap,
        },
    }


def generate_card(
    opt: OptimizationResult,
    catalog: CategoryCatalog,
    cs: ConstraintSet,
    policy: PolicyParameters,
    model_id: str = "",
    stress: StressResult | None = None,
    frontier_reference: Mapping | None = None,
    governance_hash: str | None = None,
    validation_protocol: str = "holdout-v1",
    issued_at: str | None = None,
) -> dict:
    """Regulatory filing: realized weights plus everything needed to re-audit.

    The embedded risk summary is the one computed from the embedded
    weights, so a freshly generated card always lints clean against the
    constraint set it was generated under.
    """
    portfolio = opt.portfolio
    if portfolio.catalog_version and catalog.version and portfolio.catalog_version != catalog.version:
        raise ConfigurationError(
            f"optimization result targets catalog {portfolio.catalog_version!r}, "
            f"card requested for {catalog.version!r}"
        )
    statement = generate_statement(catalog, cs, policy, issued_at=issued_at)
    checks = constraint_status(portfolio, cs, catalog, opt.risk)
    stress_doc = stress.as_dict() if stress is not None else {"rows": [], "passed": True}
    if governance_hash is None:
        governance_hash = canonical_hash(
            {"catalog": catalog.version, "weights": list(portfolio.weights)}
        )
    return {
        "schema_version": "1.0",
        "artifact": "data_portfolio_card",
        "catalog_version": catalog.version,
        "issued_at": statement["issued_at"],
        "config_hash": governance_hash,
        "statement": statement,
        "weights": [
            {"id": cid, "weight": w} for cid, w in zip(catalog.ids, portfolio.weights)
        ],
        "risk": opt.risk.as_dict(),
        "informational_return": {
            "mu": opt.mu,
            "model_id": model_id,
            "validation_protocol": validation_protocol,
        },
        "lineage": [
            {"id": c.id, **{k: v for k, v in c.lineage.items()}}
            for c in catalog.categories
        ],
        "constraint_checks": [s.as_dict() for s in checks],
        "stress": stress_doc,
        "frontier_reference": dict(frontier_reference) if frontier_reference else None,
        "solver": {
            "solver": opt.solver,
            "iterations": opt.iterations,
            "samples": opt.samples,
            "seed": opt.seed,
            "binding_constraints": list(opt.binding_constraints),
        },
    }


def generate_consumer_report(
    card: Mapping,
    attribution: AttributionResult,
    k: int,
    decision_context: str,
    contact: str = "appeals@institution.example",
) -> dict:
    """Consumer-facing explanation: names, coarse bands, magnitude buckets.

    Exact weights, raw scores, attribution numbers, and model identifiers
    are all suppressed; ties in attribution break by catalog order and the
    rule is stated in the document.
    """
    names = {row["id"]: row["id"] for row in card["weights"]}
    for entry in card["statement"]["admissible_categories"]:
        names[entry["id"]] = entry["name"]

    summary = []
    for row in card["weights"]:
        if row["weight"] <= 0:
            continue
        label = WEIGHT_BAND_FLOOR
        for edge, text in WEIGHT_BAND_EDGES:
            if row["weight"] > edge:
                label = text
                break
        summary.append({"name": names.get(row["id"], row["id"]), "weight_band": label})

    order = {row["id"]: i for i, row in enumerate(card["weights"])}
    ranked = sorted(attribution.phi.items(), key=lambda kv: (-kv[1], order.get(kv[0], 0)))
    k = min(k, len(ranked))
    positive_total = sum(v for _, v in ranked if v > 0)
    top = []
    for cid, value in ranked[:k]:
        share = value / positive_total if positive_total > 0 else 0.0
        if share >= MAGNITUDE_THRESHOLDS[0]:
            magnitude = "primary"
        elif share >= MAGNITUDE_THRESHOLDS[1]:
            magnitude = "supporting"
        else:
            magnitude = "minor"
        top.append({"name": names.get(cid, cid), "magnitude": magnitude})
    return {
        "schema_version": "1.0",
        "artifact": "consumer_portfolio_report",
        "decision_context": decision_context,
        "portfolio_summary": summary,
        "top_categories": top,
        "tie_break": "equal contributions rank by catalog order",
        "contact": contact,
    }


# ---------------------------------------------------------------------------
# Filing lint
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LintReport:
    parse_ok: bool
    schema_ok: bool
    violations: tuple[Violation, ...]

    @property
    def clean(self) -> bool:
        return self.parse_ok and self.schema_ok and not self.violations

    @property
    def exit_code(self) -> int:
        if not self.parse_ok or not self.schema_ok:
            return 1
        return 2 if self.violations else 0

    def as_dict(self) -> dict:
        return {
            "parse_ok": self.parse_ok,
            "schema_ok": self.schema_ok,
            "clean": self.clean,
            "violations": [v.as_dict() for v in self.violations],
        }


def lint_filing(
    card: Mapping | str | Path,
    cs: ConstraintSet,
    catalog: CategoryCatalog,
) -> LintReport:
    """Re-audit a filed card: schema, self-consistency, and constraints.

    Risk numbers are recomputed from the card's own weights and embedded
    policy and diffed against its self-reported values; disagreements
    beyond 1e-6 are SELF_CONSISTENCY violations.  Tail risk and stress
    rows need scenario machinery and are not recomputed here.
    """
    if isinstance(card, (str, Path)):
        try:
            card = json.loads(Path(card).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            return LintReport(
                parse_ok=False, schema_ok=False,
                violations=(Violation("card", SCHEMA_ERROR, 0.0, 0.0, str(exc)),),
            )

    validator = jsonschema.Draft202012Validator(_schema("dpc.schema.json"))
    schema_errors = sorted(validator.iter_errors(card), key=lambda e: list(e.absolute_path))
    if schema_errors:
        return LintReport(
            parse_ok=True, schema_ok=False,
            violations=tuple(
                Violation(
                    "/".join(str(p) for p in e.absolute_path) or "card",
                    SCHEMA_ERROR, 0.0, 0.0, e.message,
                )
                for e in schema_errors
            ),
        )
    statement_validator = jsonschema.Draft202012Validator(_schema("dps.schema.json"))
    statement_errors = list(statement_validator.iter_errors(card["statement"]))
    if statement_errors:
        return LintReport(
            parse_ok=True, schema_ok=False,
            violations=tuple(
                Violation("statement", SCHEMA_ERROR, 0.0, 0.0, e.message)
                for e in statement_errors
            ),
        )

    out: list[Violation] = []
    if card["catalog_version"] != catalog.version:
        out.append(
            Violation("card", CATALOG_VERSION, 0.0, 0.0,
                      f"card catalog {card['catalog_version']!r} vs {catalog.version!r}")
        )
    by_id = {row["id"]: float(row["weight"]) for row in card["weights"]}
    unknown = sorted(set(by_id) - set(catalog.ids))
    missing = sorted(set(catalog.ids) - set(by_id))
    for cid in unknown:
        out.append(Violation(f"weight:{cid}", UNKNOWN_CATEGORY, by_id[cid], 0.0,
                             f"card weights include unknown category {cid!r}"))
    for cid in missing:
        out.append(Violation(f"weight:{cid}", UNKNOWN_CATEGORY, 0.0, 0.0,
                             f"card weights omit catalog category {cid!r}"))
    if unknown or missing:
        return LintReport(True, True, tuple(out))

    # Catalog-version mismatch is already reported above, so the working
    # portfolio adopts the lint catalog's version to avoid double-counting.
    portfolio = Portfolio(tuple(by_id[cid] for cid in catalog.ids), catalog.version)
    out.extend(validate_portfolio(portfolio, catalog))

    pol = card["statement"]["policy"]
    try:
        policy = PolicyParameters(pol["alpha"], pol["beta"], pol["gamma"],
                                  cvar_eta=pol.get("cvar_eta"))
    except ConfigurationError as exc:
        out.append(Violation("statement/policy", SCHEMA_ERROR, 0.0, 0.0, str(exc)))
        return LintReport(True, True, tuple(out))
    f, p, r = aggregate_components(portfolio, catalog)
    reported = card["risk"]
    if reported.get("robustness_source") == "score-weighted":
        recomputed_r = r
    else:
        recomputed_r = float(reported["robustness"])  # model-based path, pass through
    composite = policy.alpha * f + policy.beta * p + policy.gamma * recomputed_r
    recomputed = {
        "fairness": f,
        "provenance": p,
        "robustness": recomputed_r,
        "composite": composite,
        "drwa": drwa(portfolio, catalog),
    }
    for field, value in recomputed.items():
        stated = reported.get(field)
        if stated is None:
            continue
        if abs(float(stated) - value) > SELF_CONSISTENCY_TOL:
            out.append(
                Violation(f"risk:{field}", SELF_CONSISTENCY, float(stated), value,
                          f"card reports {field}={stated} but weights recompute to {value:.9g}")
            )

    view = SimpleNamespace(
        fairness=f,
        provenance=p,
        robustness=recomputed_r,
        composite=composite,
        cvar=reported.get("cvar"),
    )
    out.extend(check_constraints(portfolio, cs, catalog, view))
    return LintReport(True, True, tuple(out))
