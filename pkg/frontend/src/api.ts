import type {
  DecisionBody,
  HealthView,
  IngestResult,
  ItemView,
  Label,
  QueuePage,
  RunResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

function detailToMessage(payload: unknown): string {
  if (payload && typeof payload === "object" && "detail" in payload) {
    const detail = (payload as { detail: unknown }).detail;
    if (typeof detail === "string") return detail;
    // FastAPI validation errors arrive as a list of {loc, msg, type}.
    if (Array.isArray(detail)) {
      const msgs = detail
        .map((d) => (d && typeof d === "object" && "msg" in d ? String((d as { msg: unknown }).msg) : ""))
        .filter((m) => m.length > 0);
      if (msgs.length > 0) return msgs.join("; ");
    }
    return JSON.stringify(detail);
  }
  return "request failed";
}

export interface QueueQuery {
  label?: Label;
  limit?: number;
  offset?: number;
}

/** Thin typed wrapper over the service routes. All methods reject with
 * ApiError on non-2xx responses; network failures reject with whatever
 * fetch threw. */
export class LoopClient {
  constructor(
    private readonly base: string,
    private readonly token: string,
  ) {
    this.base = base.replace(/\/+$/, "");
  }

  private headers(hasBody: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    if (hasBody) h["Content-Type"] = "application/json";
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method,
      headers: this.headers(body !== undefined),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let payload: unknown = null;
      try {
        payload = await resp.json();
      } catch {
        // non-JSON error body; fall through with the generic message
      }
      throw new ApiError(resp.status, detailToMessage(payload));
    }
    return (await resp.json()) as T;
  }

  health(): Promise<HealthView> {
    return this.request("GET", "/health");
  }

  queue(query: QueueQuery = {}): Promise<QueuePage> {
    const params = new URLSearchParams();
    if (query.label !== undefined) params.set("label", query.label);
    if (query.limit !== undefined) params.set("limit", String(query.limit));
    if (query.offset !== undefined) params.set("offset", String(query.offset));
    const qs = params.toString();
    return this.request("GET", "/review/queue" + (qs ? `?${qs}` : ""));
  }

  item(id: string): Promise<ItemView> {
    return this.request("GET", `/review/${encodeURIComponent(id)}`);
  }

  decide(id: string, body: DecisionBody): Promise<ItemView> {
    return this.request("POST", `/review/${encodeURIComponent(id)}/decision`, body);
  }

  ingest(post: Record<string, unknown>): Promise<IngestResult> {
    return this.request("POST", "/posts", post);
  }

  runDetection(itemIds?: string[]): Promise<RunResult> {
    return this.request("POST", "/runs", itemIds ? { item_ids: itemIds } : {});
  }

  async exportNdjson(): Promise<string> {
    const resp = await fetch(this.base + "/export", {
      headers: this.headers(false),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, "export failed");
    }
    return resp.text();
  }
}
