"""Shared fixtures: the telecom configs and small synthetic catalogs."""

from __future__ import annotations

import json
from importlib import resources

import pytest

from sdp.config import EngineConfig, load_config
from sdp.core import CategoryCatalog, DataCategory, PolicyParameters, Portfolio

# Filed portfolio weights for the two telecom examples.
DEVICE_FINANCE_WEIGHTS = (0.40, 0.25, 0.15, 0.15, 0.05)
PERSONALIZATION_WEIGHTS = (0.25, 0.20, 0.25, 0.15, 0.15)


def fixture_doc(name: str) -> dict:
    path = resources.files("sdp.fixtures").joinpath(f"{name}.json")
    return json.loads(path.read_text())


@pytest.fixture(scope="session")
def device_finance() -> EngineConfig:
    return load_config(fixture_doc("device_finance"))


@pytest.fixture(scope="session")
def personalization() -> EngineConfig:
    return load_config(fixture_doc("personalization"))


@pytest.fixture(scope="session")
def network_qos() -> EngineConfig:
    return load_config(fixture_doc("network_qos"))


@pytest.fixture
def device_finance_portfolio(device_finance) -> Portfolio:
    return Portfolio(DEVICE_FINANCE_WEIGHTS, device_finance.catalog.version)


@pytest.fixture
def personalization_portfolio(personalization) -> Portfolio:
    return Portfolio(PERSONALIZATION_WEIGHTS, personalization.catalog.version)


def make_catalog(scores, version="test", risk_weights=None, groups=None,
                 suppliers=None) -> CategoryCatalog:
    """Catalog with identical F/P/R per category, from a score list."""
    cats = []
    for i, s in enumerate(scores):
        cats.append(
            DataCategory(
                id=f"c{i}",
                name=f"Category {i}",
                fairness_score=s,
                provenance_score=s,
                robustness_score=s,
                groups=frozenset((groups or {}).get(i, ())),
                supplier_group=(suppliers or {}).get(i, ""),
                risk_weight=(risk_weights or {}).get(i, 0.0),
            )
        )
    return CategoryCatalog(tuple(cats), version=version)


@pytest.fixture
def thirds_policy() -> PolicyParameters:
    return PolicyParameters(1 / 3, 1 / 3, 1 / 3, cvar_eta=0.25)
