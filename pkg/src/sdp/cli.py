"""Command-line entry points for the portfolio engine.

Exit codes: 0 success/clean, 1 configuration or parse errors, 2 lint
violations.  Every subcommand that consumes randomness requires an
explicit --seed so runs are reproducible by construction.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import load_config
from .core import Portfolio, check_constraints, validate_portfolio
from .errors import InfeasibleError, SdpError
from .frontier import SamplerConfig, build_frontier
from .optimizer import optimize
from .pipeline import generate_reports
from .reporting import dumps_artifact, lint_filing
from .risk import full_risk_summary, stress_evaluate
from .attribution import shapley_exact, shapley_montecarlo
from .returns import evaluate_return


def _write(path: str | Path, doc) -> None:
    Path(path).write_text(dumps_artifact(doc))


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(f"config OK: {len(config.catalog)} categories, "
          f"{len(config.scenarios)} scenarios, hash {config.config_hash[:16]}")
    return 0


def _parse_weights(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _cmd_evaluate(args) -> int:
    config = load_config(args.config)
    weights = _parse_weights(args.weights)
    portfolio = Portfolio(weights, config.catalog.version)
    problems = validate_portfolio(portfolio, config.catalog)
    if problems:
        for v in problems:
            print(f"invalid portfolio: {v.message}", file=sys.stderr)
        return 1
    summary = full_risk_summary(
        portfolio, config.catalog, config.policy, config.scenarios, seed=args.seed
    )
    mu = evaluate_return(config.model, portfolio, config.catalog)
    violations = check_constraints(portfolio, config.constraints, config.catalog, summary)
    print(f"mu        = {mu:.6f}")
    print(f"F         = {summary.fairness:.6f}")
    print(f"P         = {summary.provenance:.6f}")
    print(f"R         = {summary.robustness:.6f}")
    print(f"sigma     = {summary.composite:.6f}")
    if summary.cvar is not None:
        print(f"cvar      = {summary.cvar:.6f}")
    if summary.drwa is not None:
        print(f"drwa      = {summary.drwa:.6f}")
    print(f"feasible  = {not violations}")
    for v in violations:
        print(f"violation: {v.constraint_id} [{v.code}] observed {v.observed:.6g} "
              f"vs bound {v.bound:.6g}")
    if args.out:
        _write(args.out, {
            "mu": mu, "risk": summary.as_dict(),
            "violations": [v.as_dict() for v in violations],
            "config_hash": config.config_hash,
        })
    return 0


def _sampler_from_args(args) -> SamplerConfig:
    if args.method == "grid":
        return SamplerConfig(method="grid", seed=args.seed, resolution=args.resolution)
    return SamplerConfig(
        method="dirichlet", seed=args.seed, count=args.count,
        concentration=args.concentration,
    )


def _cmd_frontier(args) -> int:
    config = load_config(args.config)
    result = build_frontier(
        config.constraints, config.catalog, config.policy, config.model,
        _sampler_from_args(args), workers=args.workers,
    )
    doc = result.as_dict()
    doc["config_hash"] = config.config_hash
    print(f"{len(result.candidates)} candidates, {len(result.pareto)} on the "
          f"staircase, {len(result.hull)} hull vertices")
    if args.out:
        _write(args.out, doc)
    return 0


def _cmd_optimize(args) -> int:
    config = load_config(args.config)
    result = optimize(
        config.model, config.constraints, config.catalog, config.policy,
        solver=args.solver, budget=args.budget, seed=args.seed,
        scenarios=config.scenarios,
    )
    print(f"solver    = {result.solver}")
    for cid, w in zip(config.catalog.ids, result.portfolio.weights):
        print(f"w[{cid}] = {w:.6f}")
    print(f"mu        = {result.mu:.6f}")
    print(f"sigma     = {result.risk.composite:.6f}")
    print("binding   = " + (", ".join(result.binding_constraints) or "none"))
    if args.out:
        doc = result.as_dict()
        doc["config_hash"] = config.config_hash
        _write(args.out, doc)
    return 0


def _cmd_shapley(args) -> int:
    config = load_config(args.config)
    portfolio = (
        Portfolio(_parse_weights(args.weights), config.catalog.version)
        if args.weights
        else optimize(config.model, config.constraints, config.catalog, config.policy,
                      seed=args.seed, scenarios=config.scenarios).portfolio
    )
    if args.method == "exact":
        result = shapley_exact(config.model, portfolio, config.catalog)
    else:
        result = shapley_montecarlo(
            config.model, portfolio, config.catalog, args.permutations, args.seed
        )
    for cid in config.catalog.ids:
        line = f"phi[{cid}] = {result.phi[cid]:+.6f}"
        if result.stderr is not None:
            line += f"  (se {result.stderr[cid]:.6f})"
        print(line)
    print(f"total     = {sum(result.phi.values()):+.6f} "
          f"(grand {result.grand_value:.6f} - baseline {result.baseline_value:.6f})")
    if args.out:
        _write(args.out, result.as_dict())
    return 0


def _cmd_stress(args) -> int:
    config = load_config(args.config)
    portfolio = (
        Portfolio(_parse_weights(args.weights), config.catalog.version)
        if args.weights
        else optimize(config.model, config.constraints, config.catalog, config.policy,
                      seed=args.seed, scenarios=config.scenarios).portfolio
    )
    result = stress_evaluate(
        portfolio, config.catalog, config.policy, config.scenarios,
        config.model, config.constraints.stress_caps,
    )
    for row in result.rows:
        status = "-" if row.passed is None else ("pass" if row.passed else "FAIL")
        clip = " (clipped)" if row.clipped else ""
        cap = "none" if row.cap is None else f"{row.cap:.4f}"
        print(f"{row.scenario_id}: mu={row.mu:.6f} sigma={row.sigma:.6f} "
              f"cap={cap} [{status}]{clip}")
    print(f"overall: {'pass' if result.passed else 'FAIL'}")
    if args.out:
        _write(args.out, result.as_dict())
    return 0 if result.passed else 2


def _cmd_report(args) -> int:
    config = load_config(args.config)
    sampler = _sampler_from_args(args)
    bundle = generate_reports(
        config, seed=args.seed, solver=args.solver, budget=args.budget,
        sampler=sampler, top_k=args.top_k,
        decision_context=args.decision_context, issued_at=args.timestamp,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, doc in bundle.documents().items():
        _write(out_dir / name, doc)
        print(f"wrote {out_dir / name}")
    return 0


def _cmd_lint(args) -> int:
    config = load_config(args.config)
    report = lint_filing(args.card, config.constraints, config.catalog)
    if args.json:
        print(dumps_artifact(report.as_dict()), end="")
    else:
        if report.clean:
            print("clean")
        for v in report.violations:
            print(f"{v.code}: {v.constraint_id}: {v.message}")
    return report.exit_code


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    port = args.port if args.port is not None else int(os.environ.get("SDP_PORT", "8000"))
    uvicorn.run(create_app(config), host=args.host, port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdp",
        description="Governance-aware data portfolio engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("config", help="path to the engine configuration JSON")

    p = sub.add_parser("validate", help="parse and cross-check a configuration")
    add_config(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("evaluate", help="score a weight vector")
    add_config(p)
    p.add_argument("--weights", required=True, help="comma/space separated weights")
    p.add_argument("--seed", type=int, default=0, help="seed for tail-risk sampling")
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("frontier", help="build the governance-efficient frontier")
    add_config(p)
    p.add_argument("--method", choices=("grid", "dirichlet"), default="dirichlet")
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--resolution", type=int, default=20)
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=_cmd_frontier)

    p = sub.add_parser("optimize", help="solve for the governance-optimal portfolio")
    add_config(p)
    p.add_argument("--solver", choices=("auto", "exact-lp", "black-box-search"),
                   default="auto")
    p.add_argument("--budget", type=int, default=20_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("shapley", help="attribute return to categories")
    add_config(p)
    p.add_argument("--method", choices=("exact", "monte-carlo"), default="exact")
    p.add_argument("--permutations", type=int, default=2_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--weights", help="portfolio to attribute (default: the optimum)")
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=_cmd_shapley)

    p = sub.add_parser("stress", help="evaluate stress scenarios")
    add_config(p)
    p.add_argument("--weights", help="portfolio to stress (default: the optimum)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=_cmd_stress)

    p = sub.add_parser("report", help="emit dps.json / dpc.json / cpr.json")
    add_config(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--solver", choices=("auto", "exact-lp", "black-box-search"),
                   default="auto")
    p.add_argument("--budget", type=int, default=20_000)
    p.add_argument("--method", choices=("grid", "dirichlet"), default="dirichlet")
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--resolution", type=int, default=20)
    p.add_argument("--concentration", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--decision-context", default="automated decision reference")
    p.add_argument("--timestamp", help="fixed ISO-8601 issue timestamp (for "
                   "reproducible artifacts); defaults to now")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("lint", help="lint a filed portfolio card")
    p.add_argument("card", help="path to a dpc.json filing")
    add_config(p)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_lint)

    p = sub.add_parser("serve", help="run the what-if HTTP API")
    add_config(p)
    p.add_argument("--port", type=int, default=None,
                   help="listen port (falls back to SDP_PORT, then 8000)")
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except SdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
