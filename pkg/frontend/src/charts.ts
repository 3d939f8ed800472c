// Chart-data transforms: ordering, percentages-for-width, table rows.
// Presentational only — every number originates in an API payload.

import type { AlphaEntry, ClassAttribution } from "./types.js";

export interface SignedBar {
  feature: string;
  phi: number;
  magnitude: number;
  direction: "pos" | "neg";
  widthPct: number; // |phi| relative to the largest shown bar
}

export function signedBars(featureNames: string[], phi: number[], topK: number): SignedBar[] {
  const order = phi
    .map((value, index) => ({ index, magnitude: Math.abs(value) }))
    .sort((a, b) => b.magnitude - a.magnitude || a.index - b.index)
    .slice(0, topK);
  const maxMagnitude = order.length ? order[0]!.magnitude : 0;
  return order.map(({ index, magnitude }) => ({
    feature: featureNames[index] ?? `f${index}`,
    phi: phi[index]!,
    magnitude,
    direction: phi[index]! < 0 ? "neg" : "pos",
    widthPct: maxMagnitude > 0 ? (magnitude / maxMagnitude) * 100 : 0,
  }));
}

export function allZero(phi: number[]): boolean {
  return phi.every((v) => v === 0);
}

export interface RankedFeature {
  feature: string;
  meanAbsPhi: number;
  widthPct: number;
}

export function globalRanking(
  ranking: string[],
  meanAbsPhi: Record<string, number>,
  topK: number
): RankedFeature[] {
  const shown = ranking.slice(0, topK);
  const maxValue = Math.max(...shown.map((f) => meanAbsPhi[f] ?? 0), 0);
  return shown.map((feature) => ({
    feature,
    meanAbsPhi: meanAbsPhi[feature] ?? 0,
    widthPct: maxValue > 0 ? ((meanAbsPhi[feature] ?? 0) / maxValue) * 100 : 0,
  }));
}

export interface AlphaRow {
  construct: string;
  alpha: string; // formatted for the table; "n/a" when the payload omits it
  detail: string;
}

export function alphaRows(alpha: Record<string, AlphaEntry>, constructs: string[]): AlphaRow[] {
  return constructs
    .filter((construct) => construct in alpha)
    .map((construct) => {
      const entry = alpha[construct]!;
      if (entry.alpha === null || entry.alpha === undefined) {
        return { construct, alpha: "n/a", detail: entry.reason ?? "" };
      }
      return {
        construct,
        alpha: entry.alpha.toFixed(2),
        detail: `n=${entry.n_respondents ?? "?"}, k=${entry.k_items ?? "?"}`,
      };
    });
}

export interface StackedSegment {
  point: number; // 1..scale_max
  count: number;
  widthPct: number; // payload percentage, used directly as segment width
}

export function stackedSegments(counts: number[], percentages: number[]): StackedSegment[] {
  return counts.map((count, index) => ({
    point: index + 1,
    count,
    widthPct: percentages[index] ?? 0,
  }));
}

export function predictionLabel(classes: ClassAttribution[]): { name: string; probability: number } {
  let best = classes[0];
  for (const c of classes) {
    if (best === undefined || c.prediction > best.prediction) best = c;
  }
  return best ? { name: best.class_name, probability: best.prediction } : { name: "?", probability: 0 };
}

export function traitHistogram(scores: number[], scaleMax = 5): number[] {
  // bins [1,1.5), [1.5,2.5), ..., [4.5,5]: nearest-integer bucket counts
  const bins = new Array(scaleMax).fill(0);
  for (const s of scores) {
    const bucket = Math.min(scaleMax, Math.max(1, Math.round(s)));
    bins[bucket - 1] += 1;
  }
  return bins;
}
