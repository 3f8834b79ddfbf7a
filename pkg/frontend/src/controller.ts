/** Orchestrates the session: edits debounce into what-if calls, responses
 * apply through the pure state transitions, and a render callback fires
 * after every state change.  Newest-wins gating drops superseded
 * responses so a slider drag never interleaves stale results.
 */

import { ApiClient, InfeasibleError, SamplerSpec } from "./api.js";
import { debounce, Debounced, LatestGate, WHATIF_DEBOUNCE_MS } from "./scheduling.js";
import {
  applyBaseResults,
  applyInfeasible,
  applyWhatif,
  editBand,
  editPolicy,
  editRiskCap,
  initialState,
  loadConfig,
  pinSnapshot,
  revertEdits,
  SessionState,
} from "./state.js";
import type { BandSpec } from "./types.js";

export interface ControllerOptions {
  seed?: number;
  sampler?: SamplerSpec;
  debounceMs?: number;
}

export class ExplorerController {
  state: SessionState = initialState();
  private readonly gate = new LatestGate();
  private readonly scheduleWhatif: Debounced<[]>;
  readonly seed: number;
  readonly sampler: SamplerSpec;

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (state: SessionState) => void,
    options: ControllerOptions = {},
  ) {
    this.seed = options.seed ?? 42;
    this.sampler = options.sampler ?? { method: "dirichlet", seed: this.seed, count: 300 };
    this.scheduleWhatif = debounce(
      () => void this.runWhatif(),
      options.debounceMs ?? WHATIF_DEBOUNCE_MS,
    );
  }

  private emit(state: SessionState): void {
    this.state = state;
    this.onChange(state);
  }

  async load(): Promise<void> {
    const [catalog, constraints] = await Promise.all([
      this.api.getCatalog(),
      this.api.getConstraints(),
    ]);
    this.emit(loadConfig(this.state, catalog, constraints));
    const [optimization, frontier, attribution] = await Promise.all([
      this.api.optimize(this.seed),
      this.api.frontier(this.sampler),
      this.api.attribution(this.seed).catch(() => null),
    ]);
    this.emit(applyBaseResults(this.state, optimization, frontier, attribution));
  }

  /** Band edit; invalid input is rejected inline and sends no request. */
  setBand(categoryId: string, band: BandSpec): string | null {
    const result = editBand(this.state, categoryId, band);
    if (!result.ok) return result.message ?? "invalid band";
    this.emit(result.state);
    this.scheduleWhatif();
    return null;
  }

  setRiskCap(cap: number | null): string | null {
    const result = editRiskCap(this.state, cap);
    if (!result.ok) return result.message ?? "invalid cap";
    this.emit(result.state);
    this.scheduleWhatif();
    return null;
  }

  setPolicy(policy: { alpha?: number; beta?: number; gamma?: number }): string | null {
    const result = editPolicy(this.state, policy);
    if (!result.ok) return result.message ?? "invalid policy";
    this.emit(result.state);
    this.scheduleWhatif();
    return null;
  }

  revert(): void {
    this.emit(revertEdits(this.state));
    this.scheduleWhatif();
  }

  pin(label: string): void {
    this.emit(pinSnapshot(this.state, label));
  }

  async runWhatif(): Promise<void> {
    const token = this.gate.begin();
    try {
      const response = await this.api.whatif(
        this.state.overrides, this.seed, this.sampler,
      );
      if (!this.gate.isCurrent(token)) return; // superseded while in flight
      this.emit(applyWhatif(this.state, response));
    } catch (err) {
      if (!this.gate.isCurrent(token)) return;
      if (err instanceof InfeasibleError) {
        this.emit(applyInfeasible(this.state, err.message, err.conflicts));
      } else {
        this.emit(applyInfeasible(this.state, String(err), []));
      }
    }
  }
}
