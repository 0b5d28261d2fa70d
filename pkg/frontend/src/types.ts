// Wire shapes for the /api/v1 endpoints.

export interface ApiErrorBody {
  code: string;
  message: string;
  line?: number;
  issues?: { item: string; reason: string }[];
}

export type Envelope<T> =
  | { ok: true; data: T }
  | { ok: false; error: ApiErrorBody };

export interface LoginData {
  token: string;
  username: string;
  role: "admin" | "expert" | "subject";
  linked_subject: string | null;
  expires_at: number;
}

export interface FormItem {
  id: string;
  prompt: string;
  kind: "likert" | "text";
  required: boolean;
  min?: number;
  max?: number;
  labels?: string[] | null;
}

export interface FormSpec {
  questionnaire_id: string;
  version: number;
  items: FormItem[];
}

export interface QuestionnaireSummary {
  id: string;
  version: number;
  n_items: number;
  score_mode: string;
}

export interface ScoreRow {
  subject: string;
  answered_at: number;
  total: number;
  n_scored: number;
  per_item: Record<string, number>;
}

export interface ParamSpec {
  name: string;
  type: "string" | "int" | "float" | "enum";
  required: boolean;
  default: unknown;
  choices?: string[];
}

export interface PluginDescriptor {
  id: string;
  name: string;
  description: string;
  param_schema: ParamSpec[];
}

export interface StreamMeta {
  subject: string;
  channel: string;
  window: [number, number];
}

export interface SeriesPayload {
  points: number[][]; // [t, y] or [t, min, max]
}

export interface TablePayload {
  columns: string[];
  rows: (number | string)[][];
}

export interface HistogramPayload {
  edges: number[];
  counts: number[];
  dropped: number;
}

export interface DataStream {
  kind: "series" | "multiseries" | "table" | "histogram";
  meta: StreamMeta;
  payload: SeriesPayload | TablePayload | HistogramPayload;
}

export interface SeriesData {
  subject: string;
  channel: string;
  points: [number, number][];
}

export interface ConfusionMetrics {
  accuracy: number;
  precision: (number | null)[];
  recall: (number | null)[];
}

export interface ConfusionData {
  matrix: number[][];
  metrics: ConfusionMetrics;
}

export interface JobData {
  id: string;
  state: "queued" | "running" | "done" | "failed";
  config: Record<string, unknown>;
  final_loss: number | null;
  history: number[];
  train_accuracy: number | null;
  test_accuracy: number | null;
  error: string | null;
}

export interface DatasetData {
  dataset_id: string;
  rows: number;
  features: string[];
  task: string;
  classes?: number;
}
