// Participant flow state machine: strict stage order, no advancing past
// unanswered required items. Pure functions; the DOM layer and the scripted
// session driver both run exactly this logic.

import type { Instrument, LikertItem } from "./types.js";

export type Stage = "demographics" | "personality" | "scenario" | "survey" | "done";

export const STAGE_ORDER: Stage[] = ["demographics", "personality", "scenario", "survey", "done"];

export const PERSONALITY_TRAITS = [
  "Honesty-Humility",
  "Neuroticism",
  "Extraversion",
  "Agreeableness",
  "Conscientiousness",
  "Openness",
];

export const SURVEY_CONSTRUCTS = ["Trust", "Reliability", "Usability"];

export const REQUIRED_DEMOGRAPHICS = ["age_band", "gender", "education", "prior_experience"];

export function stageIndex(stage: string): number {
  const index = STAGE_ORDER.indexOf(stage as Stage);
  return index === -1 ? 0 : index;
}

export function nextStage(stage: Stage): Stage {
  const index = stageIndex(stage);
  return STAGE_ORDER[Math.min(index + 1, STAGE_ORDER.length - 1)] as Stage;
}

export function itemsForStage(instrument: Instrument, stage: Stage): LikertItem[] {
  if (stage === "personality") {
    return instrument.items.filter((i) => PERSONALITY_TRAITS.includes(i.construct));
  }
  if (stage === "survey") {
    return instrument.items.filter((i) => SURVEY_CONSTRUCTS.includes(i.construct));
  }
  return [];
}

export function missingDemographics(demographics: Record<string, string>): string[] {
  return REQUIRED_DEMOGRAPHICS.filter((key) => !(demographics[key] ?? "").trim());
}

export function missingItems(
  instrument: Instrument,
  stage: Stage,
  answers: Record<string, number>
): string[] {
  return itemsForStage(instrument, stage)
    .filter((item) => !(item.id in answers))
    .map((item) => item.id);
}

export function canAdvance(
  instrument: Instrument,
  stage: Stage,
  answers: Record<string, number>,
  demographics: Record<string, string>
): boolean {
  if (stage === "demographics") return missingDemographics(demographics).length === 0;
  if (stage === "scenario") return true; // reading stage, nothing to answer
  if (stage === "done") return false;
  return missingItems(instrument, stage, answers).length === 0;
}

export function validAnswer(item: LikertItem, value: number): boolean {
  return Number.isInteger(value) && value >= 1 && value <= item.scale_max;
}
