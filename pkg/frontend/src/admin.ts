// Admin dashboard: internal-consistency table, per-item Likert stacked bars,
// trait distributions, response export. Read-only poll over /api/analytics.

import { ApiClient, ApiError } from "./api.js";
import { alphaRows, stackedSegments, traitHistogram } from "./charts.js";
import { PERSONALITY_TRAITS, SURVEY_CONSTRUCTS } from "./flow.js";
import type { AnalyticsPayload } from "./types.js";

const POLL_MS = 5000;
const TOKEN_KEY = "xnids_admin_token";

function esc(value: unknown): string {
  return String(value).replace(/[&<>"']/g, (ch) => `&#${ch.charCodeAt(0)};`);
}

export class AdminApp {
  private timer: number | undefined;

  constructor(private root: HTMLElement, private api: ApiClient) {
    const stored = localStorage.getItem(TOKEN_KEY);
    if (stored) this.api.setAdminToken(stored);
  }

  async boot(): Promise<void> {
    await this.refresh();
    this.timer = window.setInterval(() => void this.refresh(), POLL_MS);
  }

  stop(): void {
    if (this.timer !== undefined) window.clearInterval(this.timer);
  }

  private async refresh(): Promise<void> {
    try {
      const payload = await this.api.getAnalytics();
      this.render(payload);
    } catch (error) {
      if (error instanceof ApiError && error.status === 403) {
        this.renderTokenPrompt();
      } else {
        this.root.innerHTML = `<div class="banner error">Analytics unavailable: ${esc(
          error instanceof Error ? error.message : error
        )}</div>`;
      }
    }
  }

  private renderTokenPrompt(): void {
    this.stop();
    this.root.innerHTML = `
      <section class="card">
        <h2>Admin access</h2>
        <p>This dashboard requires the admin token.</p>
        <input type="password" id="admin-token" placeholder="token">
        <button id="token-go">Unlock</button>
      </section>`;
    this.root.querySelector("#token-go")?.addEventListener("click", () => {
      const token = (this.root.querySelector("#admin-token") as HTMLInputElement).value;
      localStorage.setItem(TOKEN_KEY, token);
      this.api.setAdminToken(token);
      void this.boot();
    });
  }

  private render(payload: AnalyticsPayload): void {
    const alpha = alphaRows(payload.alpha, [...SURVEY_CONSTRUCTS]);
    const alphaHtml = alpha.length
      ? `<table class="alpha-table"><thead><tr><th>Construct</th><th>Cronbach's α</th><th></th></tr></thead>
         <tbody>${alpha
           .map(
             (row) =>
               `<tr data-construct="${esc(row.construct)}"><td>${esc(row.construct)}</td><td>${esc(row.alpha)}</td><td class="detail">${esc(row.detail)}</td></tr>`
           )
           .join("")}</tbody></table>`
      : `<p class="empty-state">No constructs scored yet.</p>`;

    const items = Object.entries(payload.likert_summary);
    const likertHtml =
      payload.sessions.completed === 0
        ? `<p class="empty-state">No completed sessions yet — the summary will appear as responses arrive.</p>`
        : items
            .map(([itemId, summary]) => {
              const segments = stackedSegments(summary.counts, summary.percentages)
                .map(
                  (segment) =>
                    `<span class="segment p${segment.point}" style="width:${segment.widthPct}%" title="${segment.point}: ${segment.count}"></span>`
                )
                .join("");
              return `<div class="likert-row" data-item="${esc(itemId)}">
                <span class="likert-label" title="${esc(summary.prompt)}">${esc(itemId)}</span>
                <span class="stacked">${segments}</span>
                <span class="likert-n">n=${summary.n}</span>
              </div>`;
            })
            .join("");

    const traitsHtml = PERSONALITY_TRAITS.map((trait) => {
      const scores = payload.trait_distributions[trait] ?? [];
      const bins = traitHistogram(scores);
      const maxBin = Math.max(...bins, 1);
      const bars = bins
        .map((count, i) => `<span class="mini-bar" style="height:${(count / maxBin) * 100}%" title="${i + 1}: ${count}"></span>`)
        .join("");
      const mean = scores.length ? (scores.reduce((a, b) => a + b, 0) / scores.length).toFixed(2) : "–";
      return `<div class="trait"><span>${esc(trait)}</span><span class="mini-hist">${bars}</span><span>mean ${mean}</span></div>`;
    }).join("");

    this.root.innerHTML = `
      <section class="card">
        <h2>Sessions</h2>
        <p>${payload.sessions.completed} completed / ${payload.sessions.total} total
        ${payload.flags.map((f) => `<span class="flag">${esc(f)}</span>`).join(" ")}</p>
        <p><a href="/api/export.csv" download>Download response export (CSV)</a></p>
      </section>
      <section class="card"><h2>Internal consistency</h2>${alphaHtml}</section>
      <section class="card"><h2>Response summary (1–5 scale)</h2>
        <div class="legend">${[1, 2, 3, 4, 5].map((p) => `<span class="segment p${p} key"></span>${p}`).join(" ")}</div>
        ${likertHtml}
      </section>
      <section class="card"><h2>Personality trait distributions</h2>${traitsHtml}</section>`;
  }
}
