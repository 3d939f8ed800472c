// Participant wizard: demographics -> personality inventory -> scenario with
// prediction + attribution view -> trust/reliability/usability survey -> done.
// Every answer is POSTed as it is given; stage advances persist server-side,
// so a reload resumes at the last stored stage with prior answers intact.

import { ApiClient, ApiError } from "./api.js";
import {
  REQUIRED_DEMOGRAPHICS,
  Stage,
  canAdvance,
  itemsForStage,
  missingDemographics,
  missingItems,
  nextStage,
} from "./flow.js";
import { renderExplanation } from "./explanation.js";
import type { Instrument, Scenario, SessionState } from "./types.js";

const SESSION_KEY = "xnids_session_id";

const DEMOGRAPHIC_FIELDS: { key: string; label: string; options: string[] }[] = [
  { key: "age_band", label: "Age band", options: ["18-24", "25-34", "35-44", "45-54", "55+"] },
  { key: "gender", label: "Gender", options: ["female", "male", "non-binary", "prefer not to say"] },
  {
    key: "education",
    label: "Highest education",
    options: ["secondary", "bachelor", "master", "doctorate", "other"],
  },
  {
    key: "prior_experience",
    label: "Experience with intelligent systems",
    options: ["none", "some", "regular user", "expert"],
  },
];

function esc(value: unknown): string {
  return String(value).replace(/[&<>"']/g, (ch) => `&#${ch.charCodeAt(0)};`);
}

export class ParticipantApp {
  private session: SessionState | null = null;
  private instrument: Instrument | null = null;
  private scenarios: Scenario[] = [];
  private banner = "";

  constructor(private root: HTMLElement, private api: ApiClient) {}

  async boot(): Promise<void> {
    try {
      this.instrument = await this.api.getInstrument();
      this.scenarios = await this.api.getScenarios().catch(() => []);
      const stored = localStorage.getItem(SESSION_KEY);
      if (stored) {
        try {
          this.session = await this.api.getSession(stored);
        } catch {
          localStorage.removeItem(SESSION_KEY);
        }
      }
      if (!this.session) {
        const created = await this.api.createSession();
        this.session = await this.api.getSession(created.session_id);
        localStorage.setItem(SESSION_KEY, created.session_id);
      }
    } catch (error) {
      this.root.innerHTML = `<div class="banner error">Cannot reach the study service: ${esc(
        error instanceof Error ? error.message : error
      )}</div>`;
      return;
    }
    await this.render();
  }

  private stage(): Stage {
    return (this.session?.stage ?? "demographics") as Stage;
  }

  private async post(body: Parameters<ApiClient["postResponses"]>[1]): Promise<boolean> {
    if (!this.session) return false;
    try {
      await this.api.postResponses(this.session.session_id, body);
      this.session = await this.api.getSession(this.session.session_id);
      this.banner = "";
      return true;
    } catch (error) {
      this.banner =
        error instanceof ApiError ? error.detail : "Network failure — answers not saved, retry.";
      await this.render();
      return false;
    }
  }

  private progressHtml(): string {
    const stages: Stage[] = ["demographics", "personality", "scenario", "survey", "done"];
    const current = stages.indexOf(this.stage());
    return `<ol class="progress">${stages
      .map((s, i) => `<li class="${i < current ? "past" : i === current ? "current" : ""}">${s}</li>`)
      .join("")}</ol>`;
  }

  private likertBlock(itemId: string, prompt: string, scaleMax: number, value: number | undefined): string {
    const buttons = Array.from({ length: scaleMax }, (_, i) => i + 1)
      .map(
        (point) =>
          `<label class="likert-point"><input type="radio" name="${esc(itemId)}" value="${point}" ${
            value === point ? "checked" : ""
          }><span>${point}</span></label>`
      )
      .join("");
    return `<div class="likert-item" data-item="${esc(itemId)}">
      <p>${esc(prompt)}</p>
      <div class="likert-scale"><span class="anchor">disagree</span>${buttons}<span class="anchor">agree</span></div>
    </div>`;
  }

  private async render(): Promise<void> {
    if (!this.session || !this.instrument) return;
    const stage = this.stage();
    let body = "";
    if (stage === "demographics") body = this.renderDemographics();
    else if (stage === "personality" || stage === "survey") body = this.renderItems(stage);
    else if (stage === "scenario") body = this.renderScenarioShell();
    else body = `<section class="card"><h2>Thank you</h2><p>Your responses have been recorded.</p></section>`;

    this.root.innerHTML = `
      ${this.banner ? `<div class="banner error">${esc(this.banner)}</div>` : ""}
      ${this.progressHtml()}
      ${body}`;
    this.wire(stage);
    if (stage === "scenario") await this.loadScenario();
  }

  private renderDemographics(): string {
    const demographics = this.session!.demographics;
    const fields = DEMOGRAPHIC_FIELDS.map(
      (field) => `
      <label class="field">${esc(field.label)}
        <select name="${field.key}">
          <option value="">choose…</option>
          ${field.options
            .map(
              (option) =>
                `<option value="${esc(option)}" ${demographics[field.key] === option ? "selected" : ""}>${esc(option)}</option>`
            )
            .join("")}
        </select>
      </label>`
    ).join("");
    return `<section class="card"><h2>About you</h2>${fields}
      <p class="inline-error" hidden></p>
      <button class="advance">Continue</button></section>`;
  }

  private renderItems(stage: "personality" | "survey"): string {
    const items = itemsForStage(this.instrument!, stage);
    const answers = this.session!.answers;
    const title = stage === "personality" ? "How you generally are" : "Your view of the system";
    const blocks = items.map((i) => this.likertBlock(i.id, i.prompt, i.scale_max, answers[i.id])).join("");
    return `<section class="card"><h2>${title}</h2>${blocks}
      <p class="inline-error" hidden></p>
      <button class="advance">Continue</button></section>`;
  }

  private renderScenarioShell(): string {
    const scenario = this.scenarios[0];
    return `<section class="card">
      <h2>${esc(scenario?.title ?? "Case study")}</h2>
      <p>${esc(scenario?.narrative ?? "Review the detection below.")}</p>
      <div id="explanation-panel"><p class="empty-state">Loading explanation…</p></div>
      <button class="advance">Continue to survey</button>
    </section>`;
  }

  private async loadScenario(): Promise<void> {
    const scenario = this.scenarios[0];
    const panel = this.root.querySelector<HTMLElement>("#explanation-panel");
    if (!panel) return;
    if (!scenario) {
      renderExplanation(panel, null);
      return;
    }
    try {
      const payload = await this.api.getExplanation(scenario.instance_id);
      renderExplanation(panel, payload);
      await this.post({ scenario_id: scenario.id });
    } catch {
      renderExplanation(panel, null);
    }
  }

  private wire(stage: Stage): void {
    // persist each answer as it is given
    this.root.querySelectorAll<HTMLInputElement>(".likert-item input").forEach((input) => {
      input.addEventListener("change", async () => {
        const itemId = input.closest<HTMLElement>(".likert-item")!.dataset.item!;
        await this.post({ items: { [itemId]: Number(input.value) } });
      });
    });

    const advance = this.root.querySelector<HTMLButtonElement>(".advance");
    advance?.addEventListener("click", async () => {
      const errorLine = this.root.querySelector<HTMLElement>(".inline-error");
      if (stage === "demographics") {
        const demographics: Record<string, string> = {};
        this.root.querySelectorAll<HTMLSelectElement>("select").forEach((select) => {
          demographics[select.name] = select.value;
        });
        const missing = missingDemographics(demographics);
        if (missing.length) {
          if (errorLine) {
            errorLine.hidden = false;
            errorLine.textContent = `Please answer: ${missing.join(", ")}`;
          }
          return;
        }
        if (await this.post({ demographics, stage: nextStage(stage) })) await this.render();
        return;
      }
      if (!canAdvance(this.instrument!, stage, this.session!.answers, this.session!.demographics)) {
        const missing = missingItems(this.instrument!, stage, this.session!.answers);
        if (errorLine) {
          errorLine.hidden = false;
          errorLine.textContent = `Please answer all items (${missing.length} remaining).`;
        }
        const first = this.root.querySelector(`[data-item="${missing[0]}"]`);
        first?.scrollIntoView({ behavior: "smooth", block: "center" });
        return;
      }
      if (stage === "survey") {
        if (!this.session) return;
        try {
          await this.api.completeSession(this.session.session_id);
          this.session = await this.api.getSession(this.session.session_id);
          localStorage.removeItem(SESSION_KEY);
        } catch (error) {
          this.banner = error instanceof ApiError ? error.detail : "Network failure.";
        }
        await this.render();
        return;
      }
      if (await this.post({ stage: nextStage(stage) })) await this.render();
    });
  }
}
