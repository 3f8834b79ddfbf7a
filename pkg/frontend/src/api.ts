/** Thin client over the engine's JSON HTTP API.
 *
 * `fetch` is injectable so tests can stub the transport.  422 responses
 * carry a structured infeasibility report and surface as InfeasibleError
 * rather than a generic failure.  Report downloads keep the exact bytes
 * the API returned (the `files` mode), never a re-serialization.
 */

import type {
  AttributionResponse,
  CatalogResponse,
  ConstraintsResponse,
  FrontierResponse,
  InfeasibleBody,
  OptimizationResponse,
  OverrideSet,
  ReportFilesResponse,
  WhatifResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class InfeasibleError extends Error {
  readonly conflicts: string[];

  constructor(body: InfeasibleBody) {
    super(body.message);
    this.name = "InfeasibleError";
    this.conflicts = body.conflicts;
  }
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export interface SamplerSpec {
  method: "grid" | "dirichlet";
  seed: number;
  count?: number;
  resolution?: number;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.endsWith("/") ? baseUrl.slice(0, -1) : baseUrl;
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.base}${path}`, init);
    const text = await resp.text();
    let body: unknown = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = { raw: text };
    }
    if (resp.status === 422 && body && (body as InfeasibleBody).error === "infeasible") {
      throw new InfeasibleError(body as InfeasibleBody);
    }
    if (!resp.ok) {
      const detail =
        body && typeof body === "object" && "message" in (body as object)
          ? String((body as { message: unknown }).message)
          : `HTTP ${resp.status}`;
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getCatalog(): Promise<CatalogResponse> {
    return this.request("/catalog");
  }

  getConstraints(): Promise<ConstraintsResponse> {
    return this.request("/constraints");
  }

  optimize(seed: number, overrides: OverrideSet = {}): Promise<OptimizationResponse> {
    return this.post("/optimize", { seed, overrides });
  }

  frontier(sampler: SamplerSpec): Promise<FrontierResponse> {
    return this.post("/frontier", { sampler });
  }

  whatif(
    overrides: OverrideSet,
    seed: number,
    sampler?: SamplerSpec,
  ): Promise<WhatifResponse> {
    return this.post("/whatif", { overrides, seed, sampler });
  }

  attribution(seed: number, method = "exact"): Promise<AttributionResponse> {
    return this.post("/attribution", { method, seed });
  }

  /** Artifact documents as the exact bytes the engine serialized. */
  reportFiles(seed: number, issuedAt?: string): Promise<ReportFilesResponse> {
    return this.post("/report", { seed, issued_at: issuedAt, as_files: true });
  }
}
