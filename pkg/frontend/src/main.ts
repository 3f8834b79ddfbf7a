/** Browser bootstrap: the only module that touches the DOM.
 *
 * Everything it displays comes from renderer strings over API responses;
 * the page itself holds no domain numbers.  The API base URL comes from
 * ./config.json when present, else same-origin.
 */

import { ApiClient } from "./api.js";
import { ExplorerController } from "./controller.js";
import {
  renderAttributionBars,
  renderBindingBadges,
  renderCompareTable,
  renderDiffPanel,
  renderErrorPanel,
  renderFrontierView,
  renderReportPanels,
  renderRiskPanel,
  renderStaleBanner,
} from "./render.js";
import type { SessionState } from "./state.js";

async function resolveApiBase(): Promise<string> {
  try {
    const resp = await fetch("./config.json");
    if (resp.ok) {
      const cfg = (await resp.json()) as { apiBase?: string };
      if (cfg.apiBase) return cfg.apiBase;
    }
  } catch {
    // same-origin fallback below
  }
  return "";
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function currentRiskCap(state: SessionState): number | null {
  const override = state.overrides.constraints?.risk_cap;
  if (override !== undefined) return override;
  return state.constraints?.constraints.risk_cap ?? null;
}

function renderAll(state: SessionState): void {
  el("stale").innerHTML = renderStaleBanner(state.stale);
  el("notice").textContent = state.notice ?? "";
  if (state.error) {
    el("error").innerHTML = renderErrorPanel(state.error.message, state.error.conflicts);
  } else {
    el("error").innerHTML = "";
  }
  if (state.frontier) {
    el("frontier").innerHTML = renderFrontierView(
      state.frontier, state.optimization, currentRiskCap(state),
    );
  }
  if (state.optimization) {
    el("risk").innerHTML = renderRiskPanel(state.optimization);
    el("binding").innerHTML = renderBindingBadges(
      state.optimization, state.newlyBinding, state.noLongerBinding,
    );
  }
  if (state.catalog && state.baseOptimization && state.optimization) {
    el("diff").innerHTML = renderDiffPanel(
      state.catalog, state.baseOptimization, state.optimization,
    );
  }
  if (state.catalog && state.attribution) {
    el("attribution").innerHTML = renderAttributionBars(state.catalog, state.attribution);
  }
  el("compare").innerHTML = renderCompareTable(state.snapshots);
}

function buildBandEditors(controller: ExplorerController): void {
  const host = el("bands");
  const catalog = controller.state.catalog;
  const constraints = controller.state.constraints;
  if (!catalog || !constraints) return;
  host.innerHTML = "";
  for (const cat of catalog.categories) {
    const declared = constraints.constraints.bands?.[cat.id];
    const row = document.createElement("div");
    row.className = "band-row";
    const label = document.createElement("label");
    label.textContent = cat.name;
    const lower = document.createElement("input");
    lower.type = "number";
    lower.step = "0.01";
    lower.min = "0";
    lower.max = "1";
    lower.value = String(declared?.lower ?? 0);
    const upper = document.createElement("input");
    upper.type = "number";
    upper.step = "0.01";
    upper.min = "0";
    upper.max = "1";
    upper.value = String(declared?.upper ?? 1);
    const message = document.createElement("span");
    message.className = "inline-error";
    const apply = () => {
      const error = controller.setBand(cat.id, {
        lower: Number(lower.value),
        upper: Number(upper.value),
      });
      message.textContent = error ?? "";
    };
    lower.addEventListener("input", apply);
    upper.addEventListener("input", apply);
    row.append(label, lower, upper, message);
    host.append(row);
  }
}

async function boot(): Promise<void> {
  const api = new ApiClient(await resolveApiBase());
  const controller = new ExplorerController(api, renderAll);
  await controller.load();
  buildBandEditors(controller);

  const capInput = el("risk-cap") as HTMLInputElement;
  const base = controller.state.constraints?.constraints.risk_cap;
  if (base !== null && base !== undefined) capInput.value = String(base);
  capInput.addEventListener("input", () => {
    const error = controller.setRiskCap(
      capInput.value === "" ? null : Number(capInput.value),
    );
    el("cap-error").textContent = error ?? "";
  });

  for (const name of ["alpha", "beta", "gamma"] as const) {
    const input = el(`policy-${name}`) as HTMLInputElement;
    input.addEventListener("input", () => {
      const error = controller.setPolicy({ [name]: Number(input.value) });
      el("policy-error").textContent = error ?? "";
    });
  }

  el("pin").addEventListener("click", () => {
    controller.pin(`snapshot ${controller.state.snapshots.length + 1}`);
  });
  el("revert").addEventListener("click", () => controller.revert());
  // retry button inside the error panel re-issues the last what-if
  el("error").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.matches("button.retry")) void controller.runWhatif();
  });

  el("load-reports").addEventListener("click", async () => {
    const reports = await api.reportFiles(controller.seed);
    const host = el("reports");
    host.innerHTML = renderReportPanels(reports.files);
    host.querySelectorAll<HTMLButtonElement>("button.download").forEach((button) => {
      button.addEventListener("click", () => {
        const name = button.dataset.file ?? "artifact.json";
        // exact bytes the API returned, never re-serialized
        const blob = new Blob([reports.files[name]], { type: "application/json" });
        const link = document.createElement("a");
        link.href = URL.createObjectURL(blob);
        link.download = name;
        link.click();
        URL.revokeObjectURL(link.href);
      });
    });
  });
}

void boot();
