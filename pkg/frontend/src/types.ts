// Payload shapes mirrored from the service JSON API. The UI renders these
// verbatim; it never recomputes scores or attributions.

export interface LikertItem {
  id: string;
  construct: string;
  prompt: string;
  reverse_keyed: boolean;
  scale_max: number;
}

export interface Instrument {
  scale_max: number;
  items: LikertItem[];
}

export interface Scenario {
  id: string;
  title: string;
  narrative: string;
  instance_id: string;
  model_family: string;
}

export interface ClassAttribution {
  class_index: number;
  class_name: string;
  base_value: number;
  phi: number[];
  prediction: number;
  ridge_fallback: boolean;
}

export interface ExplainedInstance {
  instance_id: string;
  index: number;
  true_label: number;
  true_label_name: string;
  predicted_label: number;
  predicted_label_name: string;
  features_scaled: number[];
  features_raw: (number | string)[];
  classes: ClassAttribution[];
}

export interface ClassSummary {
  class_index: number;
  class_name: string;
  ranking: string[];
  mean_abs_phi: Record<string, number>;
}

export interface ExplanationPayload {
  feature_names: string[];
  instance: ExplainedInstance;
  summaries: ClassSummary[];
}

export interface SessionState {
  session_id: string;
  demographics: Record<string, string>;
  answers: Record<string, number>;
  scenario_id: string | null;
  stage: string;
  created_at: string;
  completed_at: string;
}

export interface AlphaEntry {
  alpha: number | null;
  reason?: string;
  n_respondents?: number;
  k_items?: number;
}

export interface AnalyticsPayload {
  sessions: { total: number; completed: number };
  alpha: Record<string, AlphaEntry>;
  likert_summary: Record<
    string,
    { construct: string; prompt: string; counts: number[]; percentages: number[]; n: number }
  >;
  trait_distributions: Record<string, number[]>;
  flags: string[];
}
