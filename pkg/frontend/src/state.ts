import type { LoopClient } from "./api.js";
import { ApiError } from "./api.js";
import type { DecisionBody, ItemView, Label, MisinfoType, VerdictView } from "./types.js";

export interface QueueState {
  items: ItemView[];
  selectedId: string | null;
}

export function emptyQueue(): QueueState {
  return { items: [], selectedId: null };
}

/** Replace the item list, keeping the current selection when that item
 * is still queued and falling back to the first item otherwise. */
export function withItems(state: QueueState, items: ItemView[]): QueueState {
  const stillThere = items.some((it) => it.id === state.selectedId);
  const selectedId = stillThere ? state.selectedId : (items[0]?.id ?? null);
  return { items, selectedId };
}

export function selectedIndex(state: QueueState): number {
  return state.items.findIndex((it) => it.id === state.selectedId);
}

export function selectStep(state: QueueState, delta: number): QueueState {
  if (state.items.length === 0) return state;
  const at = selectedIndex(state);
  const next = at < 0 ? 0 : Math.min(state.items.length - 1, Math.max(0, at + delta));
  const item = state.items[next];
  return { ...state, selectedId: item ? item.id : null };
}

/** Remove a decided item; selection moves to the item that now occupies
 * its slot, or the new last item when it was at the end. */
export function dropItem(state: QueueState, id: string): QueueState {
  const at = state.items.findIndex((it) => it.id === id);
  const items = state.items.filter((it) => it.id !== id);
  if (state.selectedId !== id) return { ...state, items };
  if (items.length === 0) return { items, selectedId: null };
  const heir = items[Math.min(at, items.length - 1)];
  return { items, selectedId: heir ? heir.id : null };
}

// ---------------------------------------------------------------------------
// decision drafting

export interface DecisionDraft {
  accept: boolean | null;
  finalLabel: Label | null;
  types: MisinfoType[];
  note: string;
}

export function emptyDraft(): DecisionDraft {
  return { accept: null, finalLabel: null, types: [], note: "" };
}

/** Accepting defaults the final label to what the pipeline said, since
 * confirming the machine verdict is the common case. */
export function startAccept(draft: DecisionDraft, verdict: VerdictView | null): DecisionDraft {
  const finalLabel = draft.finalLabel ?? verdict?.label ?? null;
  return { ...draft, accept: true, finalLabel };
}

export function startReject(draft: DecisionDraft): DecisionDraft {
  return { ...draft, accept: false, finalLabel: null, types: [] };
}

export function setLabel(draft: DecisionDraft, label: Label): DecisionDraft {
  const types = label === "real" ? [] : draft.types;
  return { ...draft, accept: true, finalLabel: label, types };
}

export function toggleType(draft: DecisionDraft, t: MisinfoType): DecisionDraft {
  if (draft.accept !== true || draft.finalLabel !== "fake") return draft;
  const types = draft.types.includes(t)
    ? draft.types.filter((x) => x !== t)
    : [...draft.types, t];
  return { ...draft, types };
}

export function setNote(draft: DecisionDraft, note: string): DecisionDraft {
  return { ...draft, note };
}

/** Client-side mirror of the service's decision rules. Returns a
 * human-readable reason when the draft must not be submitted, null when
 * it is ready. */
export function validateDraft(draft: DecisionDraft, reviewer: string): string | null {
  if (reviewer.trim() === "") return "set a reviewer id first";
  if (draft.accept === null) return "choose accept or reject";
  if (draft.accept) {
    if (draft.finalLabel === null) return "pick the final label";
    if (draft.finalLabel === "fake" && draft.types.length === 0) {
      return "accepting as fake needs at least one type";
    }
    if (draft.finalLabel === "real" && draft.types.length > 0) {
      return "a real post carries no misinformation types";
    }
  } else if (draft.finalLabel !== null || draft.types.length > 0) {
    return "rejecting discards the label and types";
  }
  return null;
}

export function decisionBody(draft: DecisionDraft, reviewer: string): DecisionBody {
  const body: DecisionBody = {
    accept: draft.accept === true,
    reviewer_id: reviewer.trim(),
  };
  if (draft.accept && draft.finalLabel !== null) {
    body.final_label = draft.finalLabel;
    if (draft.finalLabel === "fake") body.types = draft.types;
  }
  if (draft.note.trim() !== "") body.note = draft.note.trim();
  return body;
}

export type SubmitOutcome =
  | { kind: "blocked"; reason: string }
  | { kind: "decided"; item: ItemView; state: QueueState }
  | { kind: "error"; status: number; message: string };

/** Validate locally, and only when that passes send the decision. An
 * invalid draft never reaches the network. */
export async function submitDecision(
  client: Pick<LoopClient, "decide">,
  state: QueueState,
  itemId: string,
  draft: DecisionDraft,
  reviewer: string,
): Promise<SubmitOutcome> {
  const reason = validateDraft(draft, reviewer);
  if (reason !== null) return { kind: "blocked", reason };
  try {
    const item = await client.decide(itemId, decisionBody(draft, reviewer));
    return { kind: "decided", item, state: dropItem(state, itemId) };
  } catch (err) {
    if (err instanceof ApiError) {
      return { kind: "error", status: err.status, message: err.message };
    }
    throw err;
  }
}
