// Scripted study sessions against a live service, driving the same flow
// state machine and chart transforms the browser UI runs.
//
//   node dist/e2e_session.js --base http://127.0.0.1:8077 --sessions 5
//
// Completes N participant sessions end to end (demographics -> personality
// -> scenario -> survey -> done), then verifies: every response appears in
// the store export; the dashboard's alpha table rows equal the analytics
// payload; per-item stacked segments sum to 100%; and on three spot-checked
// instances the explanation bars are |phi|-descending with sign preserved.

import { ApiClient } from "./api.js";
import { alphaRows, signedBars, stackedSegments } from "./charts.js";
import {
  REQUIRED_DEMOGRAPHICS,
  SURVEY_CONSTRUCTS,
  Stage,
  canAdvance,
  itemsForStage,
  nextStage,
} from "./flow.js";
import type { Instrument } from "./types.js";

function argValue(flag: string, fallback: string): string {
  const index = process.argv.indexOf(flag);
  return index >= 0 && process.argv[index + 1] ? process.argv[index + 1]! : fallback;
}

// deterministic small PRNG so reruns exercise identical answer patterns
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

let failures = 0;
function check(condition: boolean, label: string): void {
  if (condition) {
    console.log(`ok   ${label}`);
  } else {
    failures += 1;
    console.error(`FAIL ${label}`);
  }
}

async function runSession(api: ApiClient, instrument: Instrument, seed: number): Promise<string> {
  const rand = mulberry32(seed);
  const { session_id } = await api.createSession();
  let state = await api.getSession(session_id);

  // demographics
  const demographics: Record<string, string> = {};
  for (const key of REQUIRED_DEMOGRAPHICS) demographics[key] = `choice-${1 + Math.floor(rand() * 3)}`;
  check(!canAdvance(instrument, "demographics", {}, {}), `s${seed}: empty demographics gate holds`);
  await api.postResponses(session_id, { demographics, stage: nextStage("demographics") });
  state = await api.getSession(session_id);
  check(state.stage === "personality", `s${seed}: advanced to personality`);

  for (const stage of ["personality", "survey"] as Stage[]) {
    if (stage === "survey") {
      // pass through the scenario reading stage first
      const scenarios = await api.getScenarios().catch(() => []);
      if (scenarios.length) await api.postResponses(session_id, { scenario_id: scenarios[0]!.id });
      await api.postResponses(session_id, { stage: "survey" });
      state = await api.getSession(session_id);
      check(state.stage === "survey", `s${seed}: advanced to survey`);
    }
    const items = itemsForStage(instrument, stage);
    check(
      !canAdvance(instrument, stage, state.answers, state.demographics),
      `s${seed}: ${stage} gate holds before answering`
    );
    for (const item of items) {
      const value = 1 + Math.floor(rand() * item.scale_max);
      await api.postResponses(session_id, { items: { [item.id]: value } });
    }
    state = await api.getSession(session_id);
    check(
      canAdvance(instrument, stage, state.answers, state.demographics),
      `s${seed}: ${stage} complete, gate opens`
    );
    if (stage === "personality") {
      await api.postResponses(session_id, { stage: nextStage(stage) });
      state = await api.getSession(session_id);
      check(state.stage === "scenario", `s${seed}: advanced to scenario`);
    }
  }

  await api.completeSession(session_id);
  state = await api.getSession(session_id);
  check(state.stage === "done" && state.completed_at !== "", `s${seed}: session completed`);
  return session_id;
}

async function main(): Promise<void> {
  const base = argValue("--base", "http://127.0.0.1:8077");
  const nSessions = Number(argValue("--sessions", "5"));
  const api = new ApiClient(base);

  const instrument = (await api.getInstrument()) as Instrument;
  check(instrument.items.length > 0, "instrument loaded");

  const sessionIds: string[] = [];
  for (let i = 0; i < nSessions; i++) sessionIds.push(await runSession(api, instrument, 100 + i));

  // store export contains every completed session and every item column
  const csv = await api.getExportCsv();
  const lines = csv.trim().split("\n");
  check(lines.length === nSessions + 1, `export has ${nSessions} rows + header (got ${lines.length - 1})`);
  const header = (lines[0] ?? "").split(",");
  for (const item of instrument.items.slice(0, 3)) {
    check(header.includes(item.id), `export header carries ${item.id}`);
  }
  for (const sid of sessionIds) {
    check(lines.some((line) => line.startsWith(sid + ",")), `export carries session ${sid.slice(0, 8)}…`);
  }
  const sampleRow = lines.find((line) => line.startsWith(sessionIds[0] + ","));
  const sampleState = await api.getSession(sessionIds[0]!);
  const cells = (sampleRow ?? "").split(",");
  let answersMatch = true;
  for (const item of instrument.items) {
    const column = header.indexOf(item.id);
    if (column < 0 || Number(cells[column]) !== sampleState.answers[item.id]) answersMatch = false;
  }
  check(answersMatch, "exported answers equal stored session answers");

  // dashboard table rows equal the analytics payload values
  const analytics = await api.getAnalytics();
  check(analytics.sessions.completed === nSessions, `analytics counts ${nSessions} completed sessions`);
  const rows = alphaRows(analytics.alpha, [...SURVEY_CONSTRUCTS]);
  for (const row of rows) {
    const entry = analytics.alpha[row.construct]!;
    const expected = entry.alpha === null || entry.alpha === undefined ? "n/a" : entry.alpha.toFixed(2);
    check(row.alpha === expected, `alpha table row ${row.construct} renders ${expected}`);
  }
  for (const [itemId, summary] of Object.entries(analytics.likert_summary)) {
    const total = stackedSegments(summary.counts, summary.percentages).reduce(
      (acc, segment) => acc + segment.widthPct,
      0
    );
    if (summary.n > 0 && Math.abs(total - 100) > 1e-9) {
      check(false, `stacked segments for ${itemId} sum to 100`);
    }
  }
  check(true, "stacked segments sum to 100% per answered item");

  // explanation ordering/sign on three spot-checked instances
  const scenarios = await api.getScenarios().catch(() => []);
  if (scenarios.length) {
    const payload = await api.getExplanation(scenarios[0]!.instance_id);
    const spotChecked = payload.instance.classes.slice(0, 3);
    for (const cls of spotChecked) {
      const bars = signedBars(payload.feature_names, cls.phi, 15);
      let ordered = true;
      for (let i = 1; i < bars.length; i++) {
        if (bars[i]!.magnitude > bars[i - 1]!.magnitude + 1e-15) ordered = false;
      }
      const signsOk = bars.every(
        (bar) => bar.direction === (bar.phi < 0 ? "neg" : "pos") && Math.abs(bar.phi) === bar.magnitude
      );
      const valuesOk = bars.every(
        (bar) => cls.phi[payload.feature_names.indexOf(bar.feature)] === bar.phi
      );
      check(ordered && signsOk && valuesOk, `class ${cls.class_name}: bars |phi|-ordered, signs + values preserved`);
    }
  } else {
    check(false, "scenarios available for explanation spot-check");
  }

  console.log(failures === 0 ? "\nE2E: all checks passed" : `\nE2E: ${failures} checks FAILED`);
  process.exit(failures === 0 ? 0 : 1);
}

main().catch((error) => {
  console.error("E2E aborted:", error);
  process.exit(2);
});
