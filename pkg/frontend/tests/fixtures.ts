import type { ItemView, Label, VerdictView } from "../src/types.js";

export function verdict(label: Label, confidence: number): VerdictView {
  return { label, confidence, rationale: "because", reasoning_method: "multi_step" };
}

export function item(id: string, v: VerdictView | null = verdict("fake", 80)): ItemView {
  return {
    id,
    status: "pending",
    ingested_at: "2025-01-01T00:00:00+00:00",
    post: {
      id: `post-${id}`,
      text: `claim carried by ${id}`,
      images: [{ hash: "ab".repeat(32) }],
      source_url: `https://postboard.example/p/${id}`,
      topic: "politics",
    },
    verdict: v,
    digest: [
      { strategy_id: 1, count: 2, sources: ["a.example: headline", "b.example: note"] },
    ],
    decision: null,
    error_note: "",
  };
}
