import type { DecisionDraft, QueueState } from "./state.js";
import type { ItemView, MisinfoType } from "./types.js";
import { MISINFO_TYPES, TYPE_NAMES } from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#039;");
}

function snippet(text: string, max = 90): string {
  return text.length <= max ? text : text.slice(0, max - 1) + "…";
}

function labelBadge(item: ItemView): string {
  if (!item.verdict) return `<span class="badge badge-none">unassessed</span>`;
  const cls = item.verdict.label === "fake" ? "badge-fake" : "badge-real";
  return `<span class="badge ${cls}">${item.verdict.label} ${item.verdict.confidence}</span>`;
}

export function renderQueue(state: QueueState, total: number): string {
  if (state.items.length === 0) {
    return `<p class="empty">queue is empty</p>`;
  }
  const rows = state.items.map((item) => {
    const sel = item.id === state.selectedId ? " selected" : "";
    return `<li class="queue-row${sel}" data-id="${escapeHtml(item.id)}">
      ${labelBadge(item)}
      <span class="row-id">${escapeHtml(item.id)}</span>
      <span class="row-text">${escapeHtml(snippet(item.post.text))}</span>
    </li>`;
  });
  const more = total > state.items.length
    ? `<p class="more">${total - state.items.length} more not shown</p>`
    : "";
  return `<ul class="queue">${rows.join("\n")}</ul>${more}`;
}

function renderImages(item: ItemView): string {
  if (item.post.images.length === 0) return "";
  const tags = item.post.images.map((img) => {
    const name = img.hash ? img.hash.slice(0, 12) : (img.url ?? img.path ?? "?");
    return `<code class="img-ref">${escapeHtml(name)}</code>`;
  });
  return `<div class="images">images: ${tags.join(" ")}</div>`;
}

function renderDigest(item: ItemView): string {
  if (item.digest.length === 0) return `<p class="digest-empty">no evidence digest</p>`;
  const blocks = item.digest.map((d) => {
    const sources = d.sources.map((s) => `<li>${escapeHtml(s)}</li>`).join("");
    return `<div class="digest-group">
      <span class="digest-head">strategy ${d.strategy_id} (${d.count} items)</span>
      <ul>${sources}</ul>
    </div>`;
  });
  return blocks.join("\n");
}

function renderVerdict(item: ItemView): string {
  if (!item.verdict) {
    const note = item.error_note
      ? `<p class="error-note">${escapeHtml(item.error_note)}</p>`
      : "";
    return `<p class="no-verdict">not assessed yet</p>${note}`;
  }
  const v = item.verdict;
  return `<div class="verdict verdict-${v.label}">
    <strong>${v.label}</strong> at ${v.confidence}
    <span class="method">(${escapeHtml(v.reasoning_method)})</span>
    <p class="rationale">${escapeHtml(v.rationale)}</p>
  </div>`;
}

function typeBoxes(draft: DecisionDraft): string {
  const disabled = draft.accept !== true || draft.finalLabel !== "fake";
  return MISINFO_TYPES.map((t: MisinfoType, i: number) => {
    const on = draft.types.includes(t);
    return `<label class="type-box${disabled ? " disabled" : ""}">
      <input type="checkbox" data-type="${t}" ${on ? "checked" : ""} ${disabled ? "disabled" : ""}>
      <kbd>${i + 1}</kbd> ${TYPE_NAMES[t]}
    </label>`;
  }).join("\n");
}

export function renderDecisionForm(draft: DecisionDraft, reviewer: string, message: string | null): string {
  const acceptOn = draft.accept === true ? " active" : "";
  const rejectOn = draft.accept === false ? " active" : "";
  const fakeOn = draft.finalLabel === "fake" ? " active" : "";
  const realOn = draft.finalLabel === "real" ? " active" : "";
  const labelRow = draft.accept === true
    ? `<div class="label-row">
        <button data-action="label-fake" class="btn${fakeOn}"><kbd>f</kbd> fake</button>
        <button data-action="label-real" class="btn${realOn}"><kbd>e</kbd> real</button>
      </div>
      <div class="type-row">${typeBoxes(draft)}</div>`
    : "";
  const note = message ? `<p class="form-message">${escapeHtml(message)}</p>` : "";
  return `<div class="decision-form">
    <div class="accept-row">
      <button data-action="accept" class="btn${acceptOn}"><kbd>a</kbd> accept</button>
      <button data-action="reject" class="btn${rejectOn}"><kbd>x</kbd> reject</button>
    </div>
    ${labelRow}
    <input type="text" id="note" placeholder="note (optional)" value="${escapeHtml(draft.note)}">
    <button data-action="submit" class="btn submit"><kbd>enter</kbd> submit as ${escapeHtml(reviewer || "?")}</button>
    ${note}
  </div>`;
}

function renderDecision(item: ItemView): string {
  const d = item.decision;
  if (!d) return "";
  const what = d.accept
    ? `accepted as ${d.final_label}${d.types && d.types.length ? " [" + d.types.join(", ") + "]" : ""}`
    : "rejected";
  const note = d.note ? ` — "${escapeHtml(d.note)}"` : "";
  return `<div class="decision-record">${what} by ${escapeHtml(d.reviewer_id)} at ${escapeHtml(d.decided_at)}${note}</div>`;
}

export function renderDetail(
  item: ItemView | null,
  draft: DecisionDraft,
  reviewer: string,
  message: string | null,
): string {
  if (!item) return `<p class="empty">nothing selected</p>`;
  const topic = item.post.topic ? `<span class="topic">${escapeHtml(item.post.topic)}</span>` : "";
  const form = item.status === "pending"
    ? renderDecisionForm(draft, reviewer, message)
    : renderDecision(item);
  return `<article class="detail" data-id="${escapeHtml(item.id)}">
    <header>
      <h2>${escapeHtml(item.id)}</h2>
      ${topic}
      <a href="${escapeHtml(item.post.source_url)}" rel="noreferrer">${escapeHtml(item.post.id)}</a>
    </header>
    <p class="post-text">${escapeHtml(item.post.text)}</p>
    ${renderImages(item)}
    ${renderVerdict(item)}
    <section class="digest">${renderDigest(item)}</section>
    ${form}
  </article>`;
}
