/** Response shapes of the portfolio engine's HTTP API. */

export interface CategoryInfo {
  id: string;
  name: string;
  fairness_score: number;
  provenance_score: number;
  robustness_score: number;
  groups: string[];
  supplier_group: string;
  risk_weight: number;
}

export interface CatalogResponse {
  config_hash: string;
  version: string;
  categories: CategoryInfo[];
}

export interface BandSpec {
  lower?: number | null;
  upper?: number | null;
}

export interface ConstraintsDoc {
  prohibited?: string[];
  bands?: Record<string, BandSpec>;
  group_bounds?: { group: string; lower?: number | null; upper?: number | null }[];
  risk_cap?: number | null;
  cvar_cap?: number | null;
  concentration_limits?: Record<string, number>;
  drwa_budget?: number | null;
  stress_caps?: Record<string, number>;
  component_caps?: Record<string, number | null> | null;
}

export interface ConstraintsResponse {
  config_hash: string;
  constraints: ConstraintsDoc;
}

export interface RiskSummary {
  fairness: number;
  provenance: number;
  robustness: number;
  composite: number;
  cvar: number | null;
  drwa: number | null;
  robustness_source: string;
}

export interface CandidatePoint {
  weights: number[];
  mu: number;
  sigma: number;
  feasible: boolean;
  dominated: boolean;
}

export interface FrontierResponse {
  candidates: CandidatePoint[];
  pareto: CandidatePoint[];
  hull: [number, number][];
  sampler: Record<string, unknown>;
  config_hash?: string;
  seed?: number;
}

export interface OptimizationResponse {
  weights: number[];
  mu: number;
  risk: RiskSummary;
  binding_constraints: string[];
  solver: string;
  iterations: number;
  samples: number;
  seed: number | null;
  config_hash?: string;
  base_config_hash?: string;
}

export interface WhatifResponse {
  optimization: OptimizationResponse;
  newly_binding: string[];
  no_longer_binding: string[];
  frontier: FrontierResponse | null;
  config_hash: string;
  base_config_hash: string;
  seed: number;
}

export interface AttributionResponse {
  phi: Record<string, number>;
  method: string;
  grand_value: number;
  baseline_value: number;
  permutations: number | null;
  seed: number | null;
  stderr: Record<string, number> | null;
  config_hash: string;
  weights: number[];
}

export interface ReportFilesResponse {
  config_hash: string;
  files: Record<string, string>;
}

export interface InfeasibleBody {
  error: "infeasible";
  message: string;
  conflicts: string[];
}

/** Partial constraint/policy overrides a what-if request carries. */
export interface OverrideSet {
  constraints?: {
    bands?: Record<string, BandSpec>;
    risk_cap?: number | null;
    cvar_cap?: number | null;
  };
  policy?: { alpha?: number; beta?: number; gamma?: number };
}
