import { ApiError, LoopClient } from "./api.js";
import {
  dropItem,
  emptyDraft,
  emptyQueue,
  selectStep,
  setLabel,
  setNote,
  startAccept,
  startReject,
  submitDecision,
  toggleType,
  withItems,
  type DecisionDraft,
  type QueueState,
} from "./state.js";
import { renderDetail, renderQueue } from "./render.js";
import { MISINFO_TYPES, type ItemView, type Label } from "./types.js";

// ---------------------------------------------------------------------------
// wiring state

let client: LoopClient | null = null;
let queue: QueueState = emptyQueue();
let queueTotal = 0;
let detail: ItemView | null = null;
let draft: DecisionDraft = emptyDraft();
let formMessage: string | null = null;
let labelFilter: Label | "" = "";

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el as T;
};

function saved(key: string, fallback: string): string {
  return localStorage.getItem(key) ?? fallback;
}

function reviewerId(): string {
  return ($("#reviewer") as HTMLInputElement).value;
}

function setStatus(text: string, isError = false): void {
  const bar = $("#status");
  bar.textContent = text;
  bar.className = isError ? "error" : "";
}

// ---------------------------------------------------------------------------
// rendering

function paint(): void {
  $("#queue-pane").innerHTML = renderQueue(queue, queueTotal);
  $("#detail-pane").innerHTML = renderDetail(detail, draft, reviewerId(), formMessage);
  const noteInput = document.querySelector<HTMLInputElement>("#note");
  if (noteInput) {
    noteInput.addEventListener("change", () => {
      draft = setNote(draft, noteInput.value);
    });
  }
}

async function loadDetail(): Promise<void> {
  if (!client || !queue.selectedId) {
    detail = null;
    paint();
    return;
  }
  try {
    detail = await client.item(queue.selectedId);
  } catch (err) {
    detail = null;
    setStatus(err instanceof ApiError ? `load failed: ${err.message}` : String(err), true);
  }
  draft = emptyDraft();
  formMessage = null;
  paint();
}

async function refreshQueue(): Promise<void> {
  if (!client) return;
  try {
    const page = await client.queue(labelFilter ? { label: labelFilter } : {});
    queue = withItems(queue, page.items);
    queueTotal = page.total;
    setStatus(`${page.total} pending`);
  } catch (err) {
    setStatus(err instanceof ApiError ? `queue failed: ${err.message}` : String(err), true);
  }
  await loadDetail();
}

// ---------------------------------------------------------------------------
// actions

function moveSelection(delta: number): void {
  const before = queue.selectedId;
  queue = selectStep(queue, delta);
  if (queue.selectedId !== before) void loadDetail();
}

async function submit(): Promise<void> {
  if (!client || !detail) return;
  const outcome = await submitDecision(client, queue, detail.id, draft, reviewerId());
  switch (outcome.kind) {
    case "blocked":
      formMessage = outcome.reason;
      paint();
      return;
    case "error":
      formMessage = `${outcome.status}: ${outcome.message}`;
      if (outcome.status === 409) {
        // someone else decided it; drop it from our queue view
        queue = dropItem(queue, detail.id);
        await loadDetail();
      }
      paint();
      return;
    case "decided":
      queue = outcome.state;
      queueTotal = Math.max(0, queueTotal - 1);
      setStatus(`${outcome.item.id} ${outcome.item.status}`);
      await loadDetail();
  }
}

function connect(): void {
  const base = ($("#base-url") as HTMLInputElement).value.trim();
  const token = ($("#token") as HTMLInputElement).value;
  localStorage.setItem("loop.base", base);
  localStorage.setItem("loop.token", token);
  localStorage.setItem("loop.reviewer", reviewerId());
  client = new LoopClient(base, token);
  client.health().then(
    (h) => {
      setStatus(`connected, ${h.items} items, seq ${h.journal_seq}`);
      void refreshQueue();
    },
    (err) => setStatus(err instanceof ApiError ? `health: ${err.message}` : String(err), true),
  );
}

// ---------------------------------------------------------------------------
// events

function onKey(ev: KeyboardEvent): void {
  const target = ev.target as HTMLElement | null;
  if (target instanceof HTMLInputElement || target instanceof HTMLTextAreaElement) {
    if (ev.key === "Enter" && target.id === "note") {
      draft = setNote(draft, target.value);
      target.blur();
      void submit();
      ev.preventDefault();
    }
    return;
  }
  switch (ev.key) {
    case "j":
    case "ArrowDown":
      moveSelection(1);
      break;
    case "k":
    case "ArrowUp":
      moveSelection(-1);
      break;
    case "a":
      draft = startAccept(draft, detail?.verdict ?? null);
      formMessage = null;
      paint();
      break;
    case "x":
      draft = startReject(draft);
      formMessage = null;
      paint();
      break;
    case "f":
      draft = setLabel(draft, "fake");
      paint();
      break;
    case "e":
      draft = setLabel(draft, "real");
      paint();
      break;
    case "1":
    case "2":
    case "3": {
      const t = MISINFO_TYPES[Number(ev.key) - 1];
      if (t) {
        draft = toggleType(draft, t);
        paint();
      }
      break;
    }
    case "Enter":
      void submit();
      break;
    case "Escape":
      draft = emptyDraft();
      formMessage = null;
      paint();
      break;
    case "u":
      void refreshQueue();
      break;
    default:
      return;
  }
  ev.preventDefault();
}

function onClick(ev: MouseEvent): void {
  const el = ev.target instanceof Element ? ev.target : null;
  if (!el) return;
  const row = el.closest<HTMLElement>(".queue-row");
  if (row && row.dataset.id) {
    queue = { ...queue, selectedId: row.dataset.id };
    void loadDetail();
    return;
  }
  const btn = el.closest<HTMLElement>("[data-action]");
  if (btn) {
    switch (btn.dataset.action) {
      case "accept":
        draft = startAccept(draft, detail?.verdict ?? null);
        break;
      case "reject":
        draft = startReject(draft);
        break;
      case "label-fake":
        draft = setLabel(draft, "fake");
        break;
      case "label-real":
        draft = setLabel(draft, "real");
        break;
      case "submit":
        void submit();
        return;
    }
    formMessage = null;
    paint();
    return;
  }
  const box = el.closest<HTMLInputElement>("input[data-type]");
  if (box && box.dataset.type) {
    draft = toggleType(draft, box.dataset.type as (typeof MISINFO_TYPES)[number]);
    paint();
  }
}

function init(): void {
  ($("#base-url") as HTMLInputElement).value = saved("loop.base", "http://127.0.0.1:8100");
  ($("#token") as HTMLInputElement).value = saved("loop.token", "");
  ($("#reviewer") as HTMLInputElement).value = saved("loop.reviewer", "");
  $("#connect").addEventListener("click", connect);
  $("#filter").addEventListener("change", (ev) => {
    labelFilter = (ev.target as HTMLSelectElement).value as Label | "";
    void refreshQueue();
  });
  document.addEventListener("keydown", onKey);
  document.addEventListener("click", onClick);
  paint();
}

init();
