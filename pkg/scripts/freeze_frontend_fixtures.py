"""Capture real HTTP API responses over the device-finance example config
as JSON fixtures for the frontend test suite."""

import json
from importlib import resources
from pathlib import Path

from fastapi.testclient import TestClient

from sdp.config import load_config
from sdp.service import create_app

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"

BEHAVIORAL_ZERO = {
    "constraints": {"bands": {"behavioral_traces": {"lower": 0.0, "upper": 0.0}}}
}


def main() -> None:
    doc = json.loads(
        resources.files("sdp.fixtures").joinpath("device_finance.json").read_text()
    )
    client = TestClient(create_app(load_config(doc)))
    sampler = {"method": "dirichlet", "seed": 42, "count": 60}

    captures = {
        "catalog.json": client.get("/catalog"),
        "constraints.json": client.get("/constraints"),
        "optimize_base.json": client.post("/optimize", json={"seed": 0}),
        "optimize_behavioral_zero.json": client.post(
            "/optimize", json={"seed": 0, "overrides": BEHAVIORAL_ZERO}
        ),
        "whatif_behavioral_zero.json": client.post(
            "/whatif",
            json={"seed": 0, "overrides": BEHAVIORAL_ZERO, "sampler": sampler},
        ),
        "whatif_empty.json": client.post("/whatif", json={"seed": 0, "overrides": {}}),
        "frontier.json": client.post("/frontier", json={"sampler": sampler}),
        "attribution.json": client.post("/attribution", json={"method": "exact", "seed": 0}),
        "report_files.json": client.post(
            "/report",
            json={"seed": 42, "issued_at": "2026-02-01T00:00:00+00:00",
                  "as_files": True,
                  "sampler": {"method": "dirichlet", "seed": 42, "count": 50}},
        ),
        "whatif_infeasible.json": client.post(
            "/whatif",
            json={"seed": 0, "overrides": {"constraints": {"bands": {
                "payment_history": {"upper": 0.1},
                "tariff_plans": {"upper": 0.1},
                "device_attributes": {"upper": 0.1},
                "coarse_usage": {"upper": 0.1},
                "behavioral_traces": {"upper": 0.1},
            }}}},
        ),
    }
    OUT.mkdir(parents=True, exist_ok=True)
    for name, resp in captures.items():
        body = resp.json()
        (OUT / name).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        print(f"{name}: HTTP {resp.status_code}")


if __name__ == "__main__":
    main()
