// Shapes mirrored from the review loop service responses.

export type Label = "real" | "fake";

export type MisinfoType = "image_ooc" | "text_misleading" | "deepfake";

export const MISINFO_TYPES: readonly MisinfoType[] = [
  "image_ooc",
  "text_misleading",
  "deepfake",
];

export const TYPE_NAMES: Record<MisinfoType, string> = {
  image_ooc: "out-of-context image",
  text_misleading: "misleading text",
  deepfake: "deepfake",
};

export interface ImageRef {
  hash?: string;
  url?: string;
  path?: string;
}

export interface PostView {
  id: string;
  text: string;
  images: ImageRef[];
  source_url: string;
  topic: string | null;
}

export interface VerdictView {
  label: Label;
  confidence: number;
  rationale: string;
  reasoning_method: string;
}

export interface DigestEntry {
  strategy_id: number;
  count: number;
  sources: string[];
}

export interface DecisionView {
  accept: boolean;
  reviewer_id: string;
  decided_at: string;
  final_label: Label | null;
  types: MisinfoType[] | null;
  note: string;
}

export type ItemStatus = "pending" | "accepted" | "rejected";

export interface ItemView {
  id: string;
  status: ItemStatus;
  ingested_at: string;
  post: PostView;
  verdict: VerdictView | null;
  digest: DigestEntry[];
  decision: DecisionView | null;
  error_note: string;
}

export interface QueuePage {
  items: ItemView[];
  total: number;
}

export interface HealthView {
  status: string;
  items: number;
  journal_seq: number;
}

export interface DecisionBody {
  accept: boolean;
  reviewer_id: string;
  final_label?: Label;
  types?: MisinfoType[];
  note?: string;
}

export interface IngestResult {
  id: string;
  duplicate: boolean;
}

export interface RunResult {
  assessed: number;
}
