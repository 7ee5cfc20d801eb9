// Payload shapes mirroring the annotation service JSON. Field names match
// the wire format exactly; nothing here is recomputed client-side.

export const SATD_CLASSES = [
  "requirement_debt",
  "code_design_debt",
  "documentation_debt",
  "test_debt",
  "scientific_debt",
  "non_debt",
] as const;

export type SatdClass = (typeof SATD_CLASSES)[number];

export const SCIENTIFIC_INDICATORS = [
  "translation_challenge",
  "assumption",
  "missing_edge_case",
  "computational_accuracy",
  "new_scientific_finding",
] as const;

export type ScientificIndicator = (typeof SCIENTIFIC_INDICATORS)[number];

export const JUDGMENTS = ["agree", "unsure", "disagree"] as const;

export type Judgment = (typeof JUDGMENTS)[number];

export interface Provenance {
  project?: string;
  locator?: string;
  author?: string;
  section_role?: string;
  timestamp?: string;
}

export interface BatchItem {
  instance_id: string;
  kind: string;
  text: string;
  provenance: Provenance;
  scores: Record<string, number>;
  predicted: SatdClass;
  confidence: number;
  margin: number;
}

export interface BatchPayload {
  batch_id: string;
  round: number;
  strategy: { name: string } & Record<string, unknown>;
  budget: number;
  model_hash: string;
  status: string;
  items: BatchItem[];
}

export interface NextBatchResponse {
  round: number;
  batch: BatchPayload | null;
}

export interface RoundInfo {
  round: number;
  pending_batches: string[];
  dataset_size: number;
  dataset_ref: string;
  rounds_completed: number;
}

export interface LabelEntry {
  instance_id: string;
  label: SatdClass;
  indicator?: ScientificIndicator;
  annotator?: string;
}

export interface LabelSubmission {
  batch_id: string;
  annotator: string;
  submission_id: string;
  labels: LabelEntry[];
}

export interface SubmitResponse {
  batch_id: string;
  accepted: number;
  accepted_ids: string[];
  round: number;
  dataset_size: number;
}

export interface SurveyPayload {
  snippet_id: string;
  judgment: Judgment;
  usefulness: number;
  respondent: string;
}

export interface SurveyAggregate {
  count: number;
  agree_pct?: number;
  unsure_pct?: number;
  disagree_pct?: number;
  mean_usefulness?: number;
}

export interface CalibrationRowPayload {
  source: string;
  n: number;
  agreements: number;
  agreement_display: string;
  kappa: number;
  degenerate: boolean;
}

export interface CalibrationPayload {
  rows: CalibrationRowPayload[];
  combined: CalibrationRowPayload | null;
}

export interface DistributionRow {
  class: SatdClass;
  by_kind: Record<string, number>;
  total: number;
}

export interface DistributionPayload {
  rows: DistributionRow[];
  column_totals?: Record<string, number>;
  total: number;
}
