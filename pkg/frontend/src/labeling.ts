import { ApiClient, ApiError } from "./api.js";
import type { BatchItem, Label, SessionSummary } from "./types.js";

export interface Card {
  item: BatchItem;
  label: Label | null;
}

export type RoundPhase =
  | "loading"
  | "labeling"
  | "submitting"
  | "budget_exhausted"
  | "empty_pool"
  | "error";

/**
 * State machine for one labeling session. Every label in a POST traces back
 * to an explicit setLabel call; there is no auto-fill path. A BatchMismatch
 * from the service drops local state and refetches the authoritative
 * pending batch.
 */
export class LabelingSession {
  phase: RoundPhase = "loading";
  cards: Card[] = [];
  summary: SessionSummary | null = null;
  lastError: string | null = null;
  onChange: (() => void) | null = null;

  constructor(
    private client: ApiClient,
    readonly sessionId: string
  ) {}

  private notify(): void {
    this.onChange?.();
  }

  get complete(): boolean {
    return this.cards.length > 0 && this.cards.every((c) => c.label !== null);
  }

  setLabel(tweetId: string, label: Label): void {
    const card = this.cards.find((c) => c.item.tweet_id === tweetId);
    if (!card || this.phase !== "labeling") {
      return;
    }
    card.label = label;
    this.notify();
  }

  async fetchBatch(): Promise<void> {
    this.phase = "loading";
    this.notify();
    try {
      const batch = await this.client.getBatch(this.sessionId);
      this.summary = batch;
      this.cards = batch.items.map((item) => ({ item, label: null }));
      this.phase = "labeling";
    } catch (err) {
      this.absorbTerminal(err);
    }
    this.notify();
  }

  async submit(): Promise<void> {
    if (!this.complete || this.phase !== "labeling") {
      return;
    }
    this.phase = "submitting";
    this.notify();
    const labels = this.cards.map((c) => ({
      tweet_id: c.item.tweet_id,
      label: c.label as Label,
    }));
    try {
      this.summary = await this.client.postLabels(this.sessionId, labels);
      await this.fetchBatch();
      return;
    } catch (err) {
      if (err instanceof ApiError && err.code === "BatchMismatch") {
        // someone else resolved the batch; the server's pending batch wins
        await this.fetchBatch();
        return;
      }
      this.absorbTerminal(err);
    }
    this.notify();
  }

  private absorbTerminal(err: unknown): void {
    if (err instanceof ApiError) {
      if (err.code === "BudgetExhausted") {
        this.phase = "budget_exhausted";
        this.cards = [];
        return;
      }
      if (err.code === "EmptyPool") {
        this.phase = "empty_pool";
        this.cards = [];
        return;
      }
      this.lastError = `${err.code}: ${err.message}`;
    } else {
      this.lastError = String(err);
    }
    this.phase = "error";
  }
}

/** Render the session into a container; all interaction is explicit clicks
 * (or the 1/2/Enter shortcuts, which map to the same handlers). */
export function renderLabeling(root: HTMLElement, session: LabelingSession): void {
  const summary = session.summary;
  const statsLine = summary
    ? `phase ${summary.phase} · labeled ${summary.labeled} · budget left ${summary.remaining_budget}`
    : "";

  if (session.phase === "budget_exhausted" || session.phase === "empty_pool") {
    const reason =
      session.phase === "budget_exhausted"
        ? "Labeling budget is spent."
        : "Nothing left to label.";
    root.innerHTML = `
      <p class="stats">${statsLine}</p>
      <p class="terminal">${reason} Session complete.</p>`;
    return;
  }
  if (session.phase === "error") {
    root.innerHTML = `<p class="error">${session.lastError ?? "unknown error"}</p>`;
    return;
  }
  if (session.phase === "loading" || session.phase === "submitting") {
    root.innerHTML = `<p class="stats">${statsLine}</p><p class="busy">…</p>`;
    return;
  }

  const cards = session.cards
    .map((card, index) => {
      const probability =
        card.item.probability === null
          ? "seed candidate"
          : `p=${card.item.probability.toFixed(3)}`;
      return `
      <div class="card ${card.label ?? "unset"}" data-tweet="${card.item.tweet_id}">
        <div class="card-head"><span class="idx">${index + 1}</span>
          <span class="prob">${probability}</span></div>
        <p class="tweet-text"></p>
        <div class="choices">
          <button class="positive" data-label="positive">relevant (1)</button>
          <button class="negative" data-label="negative">not relevant (2)</button>
        </div>
      </div>`;
    })
    .join("\n");

  root.innerHTML = `
    <p class="stats">${statsLine}</p>
    <div class="cards">${cards}</div>
    <button class="submit" ${session.complete ? "" : "disabled"}>
      submit batch (Enter)
    </button>`;

  // tweet text goes in via textContent: it is untrusted content
  const textNodes = root.querySelectorAll(".card .tweet-text");
  session.cards.forEach((card, i) => {
    const node = textNodes[i];
    if (node) {
      node.textContent = card.item.text;
    }
  });

  root.querySelectorAll<HTMLButtonElement>(".card button").forEach((button) => {
    button.addEventListener("click", () => {
      const tweetId = button.closest(".card")?.getAttribute("data-tweet");
      if (tweetId) {
        session.setLabel(tweetId, button.dataset.label as Label);
      }
    });
  });
  root.querySelector<HTMLButtonElement>("button.submit")?.addEventListener("click", () => {
    void session.submit();
  });
}

/** Keyboard shortcuts: 1/2 label the first unset card, Enter submits. */
export function bindShortcuts(
  target: { addEventListener: Window["addEventListener"] },
  session: LabelingSession
): void {
  target.addEventListener("keydown", (event: KeyboardEvent) => {
    if (session.phase !== "labeling") {
      return;
    }
    if (event.key === "1" || event.key === "2") {
      const next = session.cards.find((c) => c.label === null);
      if (next) {
        session.setLabel(next.item.tweet_id, event.key === "1" ? "positive" : "negative");
      }
    } else if (event.key === "Enter" && session.complete) {
      void session.submit();
    }
  });
}
