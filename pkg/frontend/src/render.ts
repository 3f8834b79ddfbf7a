/** String renderers for every panel.
 *
 * All output is built from API response fields: metric values pass
 * through `metricSpan`, which stamps the element with data-metric /
 * data-value attributes carrying the verbatim response number.  The UI
 * performs no domain math; the only arithmetic here is pixel scaling.
 * Renderers are pure string functions, so identical inputs produce
 * identical markup.
 */

import type {
  AttributionResponse,
  CatalogResponse,
  FrontierResponse,
  OptimizationResponse,
} from "./types.js";
import type { Snapshot } from "./state.js";

export const PLOT_WIDTH = 640;
export const PLOT_HEIGHT = 420;
export const MARGIN = { left: 60, right: 20, top: 20, bottom: 45 };
export const MAX_RENDERED_CANDIDATES = 5000;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** A displayed metric: the verbatim API value, never a recomputation. */
export function metricSpan(name: string, value: number | null): string {
  const text = value === null ? "n/a" : String(value);
  return `<span class="metric" data-metric="${name}" data-value="${text}">${text}</span>`;
}

export interface Scale {
  (x: number): number;
}

export function linearScale(
  domainMin: number,
  domainMax: number,
  rangeMin: number,
  rangeMax: number,
): Scale {
  const span = domainMax - domainMin;
  if (span <= 0) {
    const mid = (rangeMin + rangeMax) / 2;
    return () => mid;
  }
  return (x: number) => rangeMin + ((x - domainMin) / span) * (rangeMax - rangeMin);
}

function downsample<T>(items: T[], cap: number): T[] {
  if (items.length <= cap) return items;
  const step = items.length / cap;
  const out: T[] = [];
  for (let i = 0; i < cap; i++) out.push(items[Math.floor(i * step)]);
  return out;
}

/** Frontier scatter: candidates, staircase, hull, cap line, optimum. */
export function renderFrontierView(
  frontier: FrontierResponse,
  optimization: OptimizationResponse | null,
  riskCap: number | null,
): string {
  const sigmas = frontier.candidates.map((c) => c.sigma);
  const mus = frontier.candidates.map((c) => c.mu);
  if (optimization) {
    sigmas.push(optimization.risk.composite);
    mus.push(optimization.mu);
  }
  if (riskCap !== null) sigmas.push(riskCap);
  const xMin = Math.min(...sigmas);
  const xMax = Math.max(...sigmas);
  const yMin = Math.min(...mus);
  const yMax = Math.max(...mus);
  const x = linearScale(xMin, xMax, MARGIN.left, PLOT_WIDTH - MARGIN.right);
  const y = linearScale(yMin, yMax, PLOT_HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg class="frontier-plot" width="${PLOT_WIDTH}" height="${PLOT_HEIGHT}" ` +
      `viewBox="0 0 ${PLOT_WIDTH} ${PLOT_HEIGHT}" role="img">`,
  );

  // Shaded policy-infeasible region, strictly right of the cap.  A cap at
  // or beyond the rightmost point shades nothing that exists.
  if (riskCap !== null) {
    const capX = x(riskCap);
    const width = PLOT_WIDTH - MARGIN.right - capX;
    if (width > 0) {
      parts.push(
        `<rect class="infeasible-region" x="${capX}" y="${MARGIN.top}" ` +
          `width="${width}" height="${PLOT_HEIGHT - MARGIN.top - MARGIN.bottom}"/>`,
      );
    }
    parts.push(
      `<line class="risk-cap" x1="${capX}" y1="${MARGIN.top}" x2="${capX}" ` +
        `y2="${PLOT_HEIGHT - MARGIN.bottom}" data-cap="${String(riskCap)}"/>`,
    );
  }

  for (const c of downsample(frontier.candidates, MAX_RENDERED_CANDIDATES)) {
    const cls = c.feasible ? "candidate" : "candidate excluded";
    parts.push(
      `<circle class="${cls}" cx="${x(c.sigma)}" cy="${y(c.mu)}" r="2" ` +
        `data-sigma="${String(c.sigma)}" data-mu="${String(c.mu)}"/>`,
    );
  }

  if (frontier.pareto.length > 0) {
    const staircase = frontier.pareto
      .map((p) => `${x(p.sigma)},${y(p.mu)}`)
      .join(" ");
    parts.push(`<polyline class="pareto-staircase" points="${staircase}"/>`);
  }
  if (frontier.hull.length > 0) {
    const hull = frontier.hull.map(([s, m]) => `${x(s)},${y(m)}`).join(" ");
    parts.push(`<polyline class="hull" points="${hull}"/>`);
  }

  if (optimization) {
    parts.push(
      `<circle class="optimal-marker" cx="${x(optimization.risk.composite)}" ` +
        `cy="${y(optimization.mu)}" r="6" ` +
        `data-sigma="${String(optimization.risk.composite)}" ` +
        `data-mu="${String(optimization.mu)}"/>`,
    );
  }
  parts.push("</svg>");

  const legend = optimization
    ? `<p class="optimum-readout">optimum: mu ${metricSpan("mu", optimization.mu)} ` +
      `at sigma ${metricSpan("sigma", optimization.risk.composite)}</p>`
    : "";
  return parts.join("") + legend;
}

export function renderRiskPanel(optimization: OptimizationResponse): string {
  const r = optimization.risk;
  const rows = [
    `<dt>mu</dt><dd>${metricSpan("mu", optimization.mu)}</dd>`,
    `<dt>sigma</dt><dd>${metricSpan("sigma", r.composite)}</dd>`,
    `<dt>fairness</dt><dd>${metricSpan("fairness", r.fairness)}</dd>`,
    `<dt>provenance</dt><dd>${metricSpan("provenance", r.provenance)}</dd>`,
    `<dt>robustness</dt><dd>${metricSpan("robustness", r.robustness)}</dd>`,
  ];
  if (r.cvar !== null) rows.push(`<dt>cvar</dt><dd>${metricSpan("cvar", r.cvar)}</dd>`);
  if (r.drwa !== null) rows.push(`<dt>drwa</dt><dd>${metricSpan("drwa", r.drwa)}</dd>`);
  return `<dl class="risk-panel">${rows.join("")}</dl>`;
}

export function renderBindingBadges(
  optimization: OptimizationResponse,
  newlyBinding: string[],
  noLongerBinding: string[],
): string {
  const badges = optimization.binding_constraints
    .map((id) => `<span class="badge binding">${escapeHtml(id)}</span>`)
    .join("");
  const entered = newlyBinding
    .map((id) => `<span class="badge entering">${escapeHtml(id)}</span>`)
    .join("");
  const exited = noLongerBinding
    .map((id) => `<span class="badge exiting">${escapeHtml(id)}</span>`)
    .join("");
  return (
    `<div class="binding-panel">` +
    `<div class="binding-now">${badges || "<em>no binding constraints</em>"}</div>` +
    (entered ? `<div class="binding-entered">now binding: ${entered}</div>` : "") +
    (exited ? `<div class="binding-exited">released: ${exited}</div>` : "") +
    `</div>`
  );
}

/** Weight diff between the base optimum and the current one, verbatim
 * old/new values with a direction marker (no computed deltas printed). */
export function renderDiffPanel(
  catalog: CatalogResponse,
  base: OptimizationResponse,
  current: OptimizationResponse,
): string {
  const rows = catalog.categories.map((cat, i) => {
    const before = base.weights[i];
    const after = current.weights[i];
    const direction = after > before ? "&#8593;" : after < before ? "&#8595;" : "=";
    const changed = after !== before ? " changed" : "";
    return (
      `<tr class="diff-row${changed}" data-category="${escapeHtml(cat.id)}">` +
      `<td>${escapeHtml(cat.name)}</td>` +
      `<td data-role="weight-before">${String(before)}</td>` +
      `<td class="direction">${direction}</td>` +
      `<td data-role="weight-after">${String(after)}</td></tr>`
    );
  });
  return (
    `<table class="diff-panel"><thead><tr><th>category</th><th>filed</th>` +
    `<th></th><th>what-if</th></tr></thead><tbody>${rows.join("")}</tbody></table>`
  );
}

export function renderAttributionBars(
  catalog: CatalogResponse,
  attribution: AttributionResponse,
): string {
  const names = new Map(catalog.categories.map((c) => [c.id, c.name]));
  const magnitudes = Object.values(attribution.phi).map(Math.abs);
  const maxAbs = Math.max(...magnitudes, 1e-12);
  const rows = Object.entries(attribution.phi).map(([cid, phi]) => {
    const width = (Math.abs(phi) / maxAbs) * 200;
    return (
      `<div class="attribution-row" data-category="${escapeHtml(cid)}">` +
      `<span class="label">${escapeHtml(names.get(cid) ?? cid)}</span>` +
      `<span class="bar${phi < 0 ? " negative" : ""}" style="width:${width}px"></span>` +
      `<span class="value" data-phi="${String(phi)}">${String(phi)}</span></div>`
    );
  });
  return `<div class="attribution-panel" data-method="${escapeHtml(attribution.method)}">${rows.join("")}</div>`;
}

export function renderCompareTable(snapshots: Snapshot[]): string {
  if (snapshots.length < 2) {
    return `<p class="compare-hint">pin at least two snapshots to compare</p>`;
  }
  const metric = (value: number, peers: number[]): string => {
    const differs = peers.some((p) => p !== value);
    return `<td class="${differs ? "delta" : "same"}">${String(value)}</td>`;
  };
  const header = snapshots
    .map((s) => `<th>${escapeHtml(s.label)}</th>`)
    .join("");
  const rows: string[] = [];
  const fields: [string, (s: Snapshot) => number][] = [
    ["mu", (s) => s.optimization.mu],
    ["sigma", (s) => s.optimization.risk.composite],
    ["fairness", (s) => s.optimization.risk.fairness],
    ["provenance", (s) => s.optimization.risk.provenance],
    ["robustness", (s) => s.optimization.risk.robustness],
  ];
  for (const [label, get] of fields) {
    const values = snapshots.map(get);
    rows.push(
      `<tr data-metric-row="${label}"><th>${label}</th>` +
        values.map((v) => metric(v, values)).join("") +
        `</tr>`,
    );
  }
  const binding = snapshots
    .map((s) => `<td>${s.optimization.binding_constraints.map(escapeHtml).join("<br>") || "none"}</td>`)
    .join("");
  rows.push(`<tr><th>binding</th>${binding}</tr>`);
  const top3 = snapshots
    .map((s) => {
      if (!s.attribution) return "<td>none</td>";
      const ranked = Object.entries(s.attribution.phi)
        .sort((a, b) => b[1] - a[1])
        .slice(0, 3)
        .map(([cid]) => escapeHtml(cid));
      return `<td>${ranked.join("<br>")}</td>`;
    })
    .join("");
  rows.push(`<tr><th>top categories</th>${top3}</tr>`);
  return (
    `<table class="compare-table"><thead><tr><th></th>${header}</tr></thead>` +
    `<tbody>${rows.join("")}</tbody></table>`
  );
}

export function renderReportPanels(files: Record<string, string>): string {
  const panels = Object.entries(files)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(
      ([name, body]) =>
        `<section class="report-panel" data-file="${escapeHtml(name)}">` +
        `<h3>${escapeHtml(name)}</h3>` +
        `<pre>${escapeHtml(body)}</pre>` +
        `<button class="download" data-file="${escapeHtml(name)}">download</button>` +
        `</section>`,
    );
  return `<div class="report-preview">${panels.join("")}</div>`;
}

export function renderErrorPanel(message: string, conflicts: string[]): string {
  const items = conflicts.map((c) => `<li>${escapeHtml(c)}</li>`).join("");
  return (
    `<div class="error-panel"><p>${escapeHtml(message)}</p>` +
    (items ? `<ul class="conflict-list">${items}</ul>` : "") +
    `<button class="retry">retry</button></div>`
  );
}

export function renderStaleBanner(visible: boolean): string {
  return visible
    ? `<div class="stale-banner">results were computed under a different configuration; reload</div>`
    : "";
}
