"""Pluggable informational-return evaluators and shift/scenario operators.

These surrogates stand in for full training pipelines at desk scale:
given a weight mixture over catalog categories they produce the validated
performance number the rest of the engine treats as the portfolio's
informational return.  Three analytic families cover the frontier shapes
that matter (flat, saturating, interaction-curved); arbitrary callables
plug in through the ``external`` kind, which is memoized on a 1e-9
weight grid so repeated frontier and what-if sweeps reuse evaluations.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import CategoryCatalog, Portfolio
from .errors import ConfigurationError

MODEL_KINDS = ("linear", "log-saturating", "quadratic-interaction", "external")
SHIFT_KINDS = ("coefficient-perturbation", "weight-reallocation", "score-perturbation")

_CACHE_GRID = 1e9  # quantization of weight keys for memoization


class EvaluationCache:
    """Bounded memo cache for external evaluators, safe under concurrent use."""

    def __init__(self, max_entries: int = 100_000):
        self.max_entries = max_entries
        self._data: OrderedDict[tuple[int, ...], float] = OrderedDict()
        self._lock = threading.Lock()

    @staticmethod
    def key(weights: Sequence[float]) -> tuple[int, ...]:
        return tuple(int(round(w * _CACHE_GRID)) for w in weights)

    def get(self, key: tuple[int, ...]) -> float | None:
        with self._lock:
            value = self._data.get(key)
            if value is not None:
                self._data.move_to_end(key)
            return value

    def put(self, key: tuple[int, ...], value: float) -> None:
        with self._lock:
            self._data[key] = value  # last writer wins; values are deterministic
            self._data.move_to_end(key)
            while len(self._data) > self.max_entries:
                self._data.popitem(last=False)

    def __len__(self) -> int:
        return len(self._data)


def _certify_psd(q: np.ndarray) -> None:
    """Cholesky-with-jitter PSD certificate; raises if Q is not PSD."""
    if not np.allclose(q, q.T, atol=1e-10):
        raise ConfigurationError("interaction matrix must be symmetric")
    scale = max(float(np.trace(q)) / max(q.shape[0], 1), 1.0)
    for jitter in (0.0, 1e-12, 1e-10):
        try:
            np.linalg.cholesky(q + jitter * scale * np.eye(q.shape[0]))
            return
        except np.linalg.LinAlgError:
            continue
    raise ConfigurationError("interaction matrix is not positive semidefinite")


@dataclass(frozen=True)
class ReturnModel:
    """Evaluator for the informational return of a weight mixture.

    ``parameters`` maps category id -> named coefficients:
      linear                 {"m": slope}
      log-saturating         {"a": gain >= 0, "b": curvature >= 0}
      quadratic-interaction  {"m": slope}, plus ``interaction`` (id -> id -> q)
      external               none; ``evaluator`` is called with the weight
                             vector and the catalog and must be a pure,
                             deterministic function.
    """

    kind: str
    baseline: float = 0.0
    parameters: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    interaction: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    evaluator: Callable[[np.ndarray, CategoryCatalog], float] | None = None
    model_id: str = ""
    cache: EvaluationCache | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigurationError(f"unknown return-model kind {self.kind!r}")
        if self.kind == "external":
            if self.evaluator is None:
                raise ConfigurationError("external model requires an evaluator callable")
            if self.cache is None:
                object.__setattr__(self, "cache", EvaluationCache())
        if self.kind == "log-saturating":
            for cid, p in self.parameters.items():
                if p.get("a", 0.0) < 0 or p.get("b", 0.0) < 0:
                    raise ConfigurationError(
                        f"log-saturating coefficients for {cid!r} must be >= 0"
                    )
        if self.kind == "quadratic-interaction" and self.interaction:
            ids = sorted(self.interaction)
            q = np.array(
                [[self.interaction[i].get(j, 0.0) for j in ids] for i in ids]
            )
            _certify_psd(q)
        if not self.model_id:
            object.__setattr__(self, "model_id", self.kind)

    def coefficient_vector(self, catalog: CategoryCatalog, name: str,
                           weights: np.ndarray | None = None) -> np.ndarray:
        """Per-category coefficient array; missing entries are only an error
        when the category carries positive weight."""
        out = np.zeros(len(catalog))
        missing = []
        for i, cid in enumerate(catalog.ids):
            params = self.parameters.get(cid)
            if params is None or name not in params:
                missing.append((i, cid))
            else:
                out[i] = params[name]
        for i, cid in missing:
            if weights is None or weights[i] > 0:
                raise ConfigurationError(
                    f"model {self.model_id!r} has no {name!r} coefficient for "
                    f"category {cid!r} with positive weight"
                )
        return out

    def interaction_matrix(self, catalog: CategoryCatalog) -> np.ndarray:
        q = np.zeros((len(catalog), len(catalog)))
        for i, ci in enumerate(catalog.ids):
            row = self.interaction.get(ci, {})
            for cj, val in row.items():
                q[i, catalog.index[cj]] = val
        return q


def evaluate_return(model: ReturnModel, p: Portfolio, catalog: CategoryCatalog) -> float:
    """Informational return of the mixture; deterministic."""
    w = p.as_array()
    if w.shape[0] != len(catalog):
        raise ConfigurationError("portfolio length does not match catalog")
    if model.kind == "linear":
        m = model.coefficient_vector(catalog, "m", w)
        return float(model.baseline + w @ m)
    if model.kind == "log-saturating":
        a = model.coefficient_vector(catalog, "a", w)
        b = model.coefficient_vector(catalog, "b", w)
        return float(model.baseline + np.sum(a * np.log1p(b * w)))
    if model.kind == "quadratic-interaction":
        m = model.coefficient_vector(catalog, "m", w)
        q = model.interaction_matrix(catalog)
        return float(model.baseline + w @ m - w @ q @ w)
    # external
    key = EvaluationCache.key(p.weights)
    cached = model.cache.get(key)
    if cached is not None:
        return cached
    value = float(model.evaluator(w, catalog))
    model.cache.put(key, value)
    return value


def evaluate_subset_return(
    model: ReturnModel,
    subset: Iterable[str],
    base: Portfolio,
    catalog: CategoryCatalog,
) -> float:
    """Return of the base mixture restricted to ``subset`` and renormalized.

    The empty coalition is worth the model baseline; so is a coalition
    whose members all carry zero base weight, since restricting to it
    leaves no data in the mixture.
    """
    ids = set(subset)
    unknown = ids - set(catalog.ids)
    if unknown:
        raise ConfigurationError(f"subset references unknown categories {sorted(unknown)}")
    if not ids:
        return model.baseline
    w = base.as_array().copy()
    mask = np.array([cid in ids for cid in catalog.ids])
    w[~mask] = 0.0
    total = w.sum()
    if total <= 0.0:
        return model.baseline
    return evaluate_return(model, Portfolio(tuple(w / total), catalog.version), catalog)


@dataclass(frozen=True)
class ShiftOperator:
    """A benign distribution shift used by the robustness-volatility check.

    params by kind:
      coefficient-perturbation  {"deltas": {cat_id: {coef_name: delta}}}
      weight-reallocation       {"source": id, "target": id, "amount": x >= 0}
      score-perturbation        {"deltas": {cat_id: {"fairness"|"provenance"|
                                "robustness": delta}}} -- acts on the score
                                table (see ``shifted_catalog``); a no-op for
                                return evaluation.
    """

    id: str
    kind: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SHIFT_KINDS:
            raise ConfigurationError(f"unknown shift kind {self.kind!r}")
        if self.kind == "weight-reallocation":
            for key in ("source", "target"):
                if key not in self.params:
                    raise ConfigurationError(f"weight-reallocation shift needs {key!r}")
            if float(self.params.get("amount", 0.0)) < 0:
                raise ConfigurationError("weight-reallocation amount must be >= 0")


def apply_coefficient_deltas(
    model: ReturnModel, deltas: Mapping[str, Mapping[str, float]]
) -> ReturnModel:
    """New model with per-category coefficient deltas added."""
    if model.kind == "external":
        if deltas:
            raise ConfigurationError("external models do not support coefficient deltas")
        return model
    params = {cid: dict(p) for cid, p in model.parameters.items()}
    for cid, named in deltas.items():
        slot = params.setdefault(cid, {})
        for name, delta in named.items():
            slot[name] = slot.get(name, 0.0) + delta
    return replace(model, parameters=params)


def reallocate_weights(
    p: Portfolio, catalog: CategoryCatalog, source: str, target: str, amount: float
) -> Portfolio:
    """Move up to ``amount`` of weight from source to target (stays on simplex)."""
    w = p.as_array().copy()
    si, ti = catalog.index[source], catalog.index[target]
    moved = min(amount, float(w[si]))
    w[si] -= moved
    w[ti] += moved
    return Portfolio(tuple(w), p.catalog_version)


def shifted_catalog(catalog: CategoryCatalog, shift: ShiftOperator) -> CategoryCatalog:
    """Catalog with score-perturbation deltas applied and clipped to [0, 1]."""
    if shift.kind != "score-perturbation":
        return catalog
    deltas: Mapping[str, Mapping[str, float]] = shift.params.get("deltas", {})
    return perturb_scores(catalog, deltas)[0]


def perturb_scores(
    catalog: CategoryCatalog, deltas: Mapping[str, Mapping[str, float]]
) -> tuple[CategoryCatalog, bool]:
    """Additively perturb (F, P, R) per category, clipping to the unit interval.

    Returns the perturbed catalog and whether any clipping occurred.
    """
    unknown = set(deltas) - set(catalog.ids)
    if unknown:
        raise ConfigurationError(f"perturbation references unknown categories {sorted(unknown)}")
    clipped = False
    cats = []
    for cat in catalog.categories:
        named = deltas.get(cat.id)
        if not named:
            cats.append(cat)
            continue
        new_scores = {}
        for attr, key in (
            ("fairness_score", "fairness"),
            ("provenance_score", "provenance"),
            ("robustness_score", "robustness"),
        ):
            raw = getattr(cat, attr) + named.get(key, 0.0)
            val = min(max(raw, 0.0), 1.0)
            clipped = clipped or (val != raw)
            new_scores[attr] = val
        cats.append(replace(cat, **new_scores))
    return CategoryCatalog(tuple(cats), catalog.version, catalog.created_at), clipped


def apply_shift(
    model: ReturnModel, p: Portfolio, shift: ShiftOperator, catalog: CategoryCatalog
) -> float:
    """Shifted evaluation value used inside robustness volatility."""
    if shift.kind == "coefficient-perturbation":
        shifted = apply_coefficient_deltas(model, shift.params.get("deltas", {}))
        return evaluate_return(shifted, p, catalog)
    if shift.kind == "weight-reallocation":
        moved = reallocate_weights(
            p, catalog,
            str(shift.params["source"]), str(shift.params["target"]),
            float(shift.params.get("amount", 0.0)),
        )
        return evaluate_return(model, moved, catalog)
    # score-perturbation: score tables do not enter return evaluation
    return evaluate_return(model, p, catalog)


@dataclass(frozen=True)
class Scenario:
    """One governance scenario: a probability atom of score/coefficient shifts."""

    id: str
    probability: float
    score_deltas: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    coefficient_deltas: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.probability <= 1:
            raise ConfigurationError(
                f"scenario {self.id!r} probability must lie in (0, 1], got {self.probability}"
            )


def validate_scenario_set(scenarios: Sequence[Scenario], catalog: CategoryCatalog) -> None:
    ids = [s.id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("scenario ids must be unique")
    total = sum(s.probability for s in scenarios)
    if scenarios and abs(total - 1.0) > 1e-9:
        raise ConfigurationError(f"scenario probabilities sum to {total!r}, expected 1")
    known = set(catalog.ids)
    for s in scenarios:
        for cid in list(s.score_deltas) + list(s.coefficient_deltas):
            if cid not in known:
                raise ConfigurationError(
                    f"scenario {s.id!r} references unknown category {cid!r}"
                )
