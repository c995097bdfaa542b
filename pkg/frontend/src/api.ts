import type {
  BatchResponse,
  Label,
  LayoutResponse,
  SessionRequest,
  SessionSummary,
  StatsResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "Unknown";
  let message = response.statusText;
  try {
    const body = (await response.json()) as { error?: string; message?: string };
    code = body.error ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message);
}

/** Typed client for the labeling service; one request in flight per session. */
export class ApiClient {
  private sessionChains = new Map<string, Promise<unknown>>();

  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  /** Serialize calls touching one session so a double-click cannot race. */
  private enqueue<T>(sessionId: string, task: () => Promise<T>): Promise<T> {
    const previous = this.sessionChains.get(sessionId) ?? Promise.resolve();
    const next = previous.then(task, task);
    this.sessionChains.set(sessionId, next.catch(() => undefined));
    return next;
  }

  createSession(request: SessionRequest): Promise<SessionSummary> {
    return this.request<SessionSummary>("/api/session", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
  }

  getBatch(sessionId: string): Promise<BatchResponse> {
    return this.enqueue(sessionId, () =>
      this.request<BatchResponse>(`/api/session/${sessionId}/batch`)
    );
  }

  postLabels(
    sessionId: string,
    labels: { tweet_id: string; label: Label }[]
  ): Promise<SessionSummary> {
    return this.enqueue(sessionId, () =>
      this.request<SessionSummary>(`/api/session/${sessionId}/labels`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ labels }),
      })
    );
  }

  getLayout(): Promise<LayoutResponse> {
    return this.request<LayoutResponse>("/api/layout");
  }

  getStats(): Promise<StatsResponse> {
    return this.request<StatsResponse>("/api/stats");
  }
}
