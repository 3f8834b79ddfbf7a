/** Session state and its pure transition functions.
 *
 * The canonical configuration is never edited client-side: every change
 * lives in the override set and rides along on what-if requests.  Results
 * only apply when their base config hash matches the session's; anything
 * else flips the stale banner instead of silently mixing universes.
 */

import type {
  AttributionResponse,
  BandSpec,
  CatalogResponse,
  ConstraintsResponse,
  FrontierResponse,
  OptimizationResponse,
  OverrideSet,
  WhatifResponse,
} from "./types.js";

export const MAX_SNAPSHOTS = 5;

export interface Snapshot {
  label: string;
  overrides: OverrideSet;
  optimization: OptimizationResponse;
  attribution: AttributionResponse | null;
}

export interface SessionState {
  configHash: string | null;
  catalog: CatalogResponse | null;
  constraints: ConstraintsResponse | null;
  overrides: OverrideSet;
  baseOptimization: OptimizationResponse | null;
  optimization: OptimizationResponse | null;
  frontier: FrontierResponse | null;
  attribution: AttributionResponse | null;
  newlyBinding: string[];
  noLongerBinding: string[];
  snapshots: Snapshot[];
  stale: boolean;
  notice: string | null;
  error: { message: string; conflicts: string[] } | null;
}

export function initialState(): SessionState {
  return {
    configHash: null,
    catalog: null,
    constraints: null,
    overrides: {},
    baseOptimization: null,
    optimization: null,
    frontier: null,
    attribution: null,
    newlyBinding: [],
    noLongerBinding: [],
    snapshots: [],
    stale: false,
    notice: null,
    error: null,
  };
}

export function loadConfig(
  state: SessionState,
  catalog: CatalogResponse,
  constraints: ConstraintsResponse,
): SessionState {
  return {
    ...initialState(),
    configHash: catalog.config_hash,
    catalog,
    constraints,
    snapshots: state.snapshots,
  };
}

export interface EditResult {
  ok: boolean;
  state: SessionState;
  message?: string;
}

/** Validate and record a band edit; invalid input never leaves the client. */
export function editBand(
  state: SessionState,
  categoryId: string,
  band: BandSpec,
): EditResult {
  const lower = band.lower ?? 0;
  const upper = band.upper ?? 1;
  if (lower < 0 || upper > 1) {
    return { ok: false, state, message: "band bounds must lie in [0, 1]" };
  }
  if (lower > upper) {
    return { ok: false, state, message: "band lower bound exceeds its upper bound" };
  }
  const bands = { ...(state.overrides.constraints?.bands ?? {}) };
  bands[categoryId] = { lower, upper };
  return {
    ok: true,
    state: {
      ...state,
      overrides: {
        ...state.overrides,
        constraints: { ...state.overrides.constraints, bands },
      },
      error: null,
    },
  };
}

export function editRiskCap(state: SessionState, cap: number | null): EditResult {
  if (cap !== null && cap < 0) {
    return { ok: false, state, message: "risk cap must be nonnegative" };
  }
  return {
    ok: true,
    state: {
      ...state,
      overrides: {
        ...state.overrides,
        constraints: { ...state.overrides.constraints, risk_cap: cap },
      },
      error: null,
    },
  };
}

export function editPolicy(
  state: SessionState,
  policy: { alpha?: number; beta?: number; gamma?: number },
): EditResult {
  for (const v of Object.values(policy)) {
    if (v !== undefined && v < 0) {
      return { ok: false, state, message: "policy parameters must be nonnegative" };
    }
  }
  return {
    ok: true,
    state: {
      ...state,
      overrides: { ...state.overrides, policy: { ...state.overrides.policy, ...policy } },
      error: null,
    },
  };
}

export function revertEdits(state: SessionState): SessionState {
  return { ...state, overrides: {}, error: null };
}

export function applyBaseResults(
  state: SessionState,
  optimization: OptimizationResponse,
  frontier: FrontierResponse,
  attribution: AttributionResponse | null,
): SessionState {
  const stale =
    optimization.base_config_hash !== undefined &&
    optimization.base_config_hash !== state.configHash;
  return {
    ...state,
    baseOptimization: optimization,
    optimization,
    frontier,
    attribution,
    newlyBinding: [],
    noLongerBinding: [],
    stale,
    error: null,
  };
}

export function applyWhatif(state: SessionState, response: WhatifResponse): SessionState {
  if (response.base_config_hash !== state.configHash) {
    return { ...state, stale: true };
  }
  return {
    ...state,
    optimization: response.optimization,
    frontier: response.frontier ?? state.frontier,
    newlyBinding: response.newly_binding,
    noLongerBinding: response.no_longer_binding,
    stale: false,
    error: null,
  };
}

export function applyInfeasible(
  state: SessionState,
  message: string,
  conflicts: string[],
): SessionState {
  return { ...state, error: { message, conflicts } };
}

export function pinSnapshot(state: SessionState, label: string): SessionState {
  if (!state.optimization) {
    return { ...state, notice: "nothing to pin yet" };
  }
  const snapshot: Snapshot = {
    label,
    overrides: state.overrides,
    optimization: state.optimization,
    attribution: state.attribution,
  };
  const snapshots = [...state.snapshots, snapshot];
  let notice: string | null = null;
  if (snapshots.length > MAX_SNAPSHOTS) {
    const evicted = snapshots.shift();
    notice = `snapshot limit reached; dropped oldest (${evicted?.label})`;
  }
  return { ...state, snapshots, notice };
}
