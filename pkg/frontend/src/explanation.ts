// Explanation panel: per-class signed attribution bars, global ranking,
// raw-vs-scaled feature table. Renders payload values verbatim.

import { allZero, globalRanking, predictionLabel, signedBars } from "./charts.js";
import type { ExplanationPayload } from "./types.js";

const DEFAULT_TOP_K = 15;

function esc(value: unknown): string {
  return String(value).replace(/[&<>"']/g, (ch) => `&#${ch.charCodeAt(0)};`);
}

export function renderExplanation(
  root: HTMLElement,
  payload: ExplanationPayload | null,
  state: { classIndex: number; topK: number } = { classIndex: 0, topK: DEFAULT_TOP_K }
): void {
  if (!payload || !payload.instance) {
    root.innerHTML = `<p class="empty-state">No explanation available for this case.</p>`;
    return;
  }
  const { instance, feature_names, summaries } = payload;
  const selected = instance.classes[state.classIndex] ?? instance.classes[0];
  if (!selected) {
    root.innerHTML = `<p class="empty-state">No explanation available for this case.</p>`;
    return;
  }
  const prediction = predictionLabel(instance.classes);

  const tabs = instance.classes
    .map(
      (c) =>
        `<button class="tab ${c.class_index === selected.class_index ? "active" : ""}" data-class="${c.class_index}">
          ${esc(c.class_name)} <span class="prob">${(c.prediction * 100).toFixed(1)}%</span>
        </button>`
    )
    .join("");

  let barsHtml: string;
  if (allZero(selected.phi)) {
    barsHtml = `<p class="empty-state">All attributions are zero for this class.</p>`;
  } else {
    const bars = signedBars(feature_names, selected.phi, state.topK);
    barsHtml = bars
      .map(
        (bar) => `
        <div class="bar-row" data-feature="${esc(bar.feature)}">
          <span class="bar-label">${esc(bar.feature)}</span>
          <span class="bar-track">
            <span class="bar ${bar.direction}" style="width:${bar.widthPct.toFixed(1)}%"></span>
          </span>
          <span class="bar-value">${bar.phi.toExponential(2)}</span>
        </div>`
      )
      .join("");
  }

  const summary = summaries.find((s) => s.class_index === selected.class_index);
  const rankingHtml = summary
    ? globalRanking(summary.ranking, summary.mean_abs_phi, state.topK)
        .map(
          (row) => `
          <div class="bar-row">
            <span class="bar-label">${esc(row.feature)}</span>
            <span class="bar-track"><span class="bar pos" style="width:${row.widthPct.toFixed(1)}%"></span></span>
            <span class="bar-value">${row.meanAbsPhi.toExponential(2)}</span>
          </div>`
        )
        .join("")
    : `<p class="empty-state">No global summary.</p>`;

  const tableRows = feature_names
    .map(
      (name, i) => `
      <tr><td>${esc(name)}</td><td>${esc(instance.features_raw[i])}</td><td>${(instance.features_scaled[i] ?? 0).toFixed(4)}</td></tr>`
    )
    .join("");

  root.innerHTML = `
    <div class="explanation">
      <div class="prediction-banner">
        Model verdict: <strong>${esc(prediction.name)}</strong>
        (${(prediction.probability * 100).toFixed(1)}% probability, ${esc(instance.instance_id)})
        ${selected.ridge_fallback ? '<span class="flag">regularized solve</span>' : ""}
      </div>
      <div class="tabs">${tabs}</div>
      <div class="panel-grid">
        <section>
          <h3>Feature contributions toward "${esc(selected.class_name)}"
            <select class="topk">
              ${[10, 15, 25, 41].map((k) => `<option value="${k}" ${k === state.topK ? "selected" : ""}>top ${k}</option>`).join("")}
            </select>
          </h3>
          <p class="hint">Base value ${selected.base_value.toFixed(4)}; bars push the class probability up (solid) or down (hollow).</p>
          <div class="bars">${barsHtml}</div>
        </section>
        <section>
          <h3>Global ranking (mean |contribution| across explained cases)</h3>
          <div class="bars">${rankingHtml}</div>
        </section>
      </div>
      <details>
        <summary>Record feature values (raw vs scaled)</summary>
        <table class="feature-table">
          <thead><tr><th>feature</th><th>raw</th><th>scaled</th></tr></thead>
          <tbody>${tableRows}</tbody>
        </table>
      </details>
    </div>`;

  root.querySelectorAll<HTMLButtonElement>(".tab").forEach((button) => {
    button.addEventListener("click", () => {
      renderExplanation(root, payload, { ...state, classIndex: Number(button.dataset.class) });
    });
  });
  root.querySelector<HTMLSelectElement>(".topk")?.addEventListener("change", (event) => {
    renderExplanation(root, payload, {
      ...state,
      topK: Number((event.target as HTMLSelectElement).value),
    });
  });
}
