import { ApiClient, ApiError } from "./api.js";
import { bindShortcuts, LabelingSession, renderLabeling } from "./labeling.js";
import { HashtagMap } from "./map.js";
import type { LayoutResponse } from "./types.js";

const client = new ApiClient("");

let session: LabelingSession | null = null;
let map: HashtagMap | null = null;
let cachedLayoutFingerprint: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showTab(name: "label" | "map"): void {
  el("tab-label").classList.toggle("active", name === "label");
  el("tab-map").classList.toggle("active", name === "map");
  el("panel-label").style.display = name === "label" ? "block" : "none";
  el("panel-map").style.display = name === "map" ? "block" : "none";
  if (name === "map") {
    void ensureMap();
  }
}

async function startSession(event: Event): Promise<void> {
  event.preventDefault();
  const tags = el<HTMLInputElement>("tags")
    .value.split(",")
    .map((t) => t.trim())
    .filter(Boolean);
  const budget = parseInt(el<HTMLInputElement>("budget").value, 10) || 50;
  const batch = parseInt(el<HTMLInputElement>("batch").value, 10) || 5;
  const status = el("session-status");
  try {
    const summary = await client.createSession({ tags, budget, batch_size: batch });
    status.textContent = `session ${summary.session_id} created`;
    session = new LabelingSession(client, summary.session_id);
    const rootNode = el("labeling-root");
    session.onChange = () => renderLabeling(rootNode, session as LabelingSession);
    bindShortcuts(window, session);
    await session.fetchBatch();
  } catch (err) {
    status.textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

/** Layout is fetched once per fingerprint and cached until refresh. */
async function ensureMap(forceReload = false): Promise<void> {
  const empty = el("map-empty");
  try {
    if (map !== null && !forceReload) {
      return;
    }
    const layout: LayoutResponse = await client.getLayout();
    if (!forceReload && layout.fingerprint === cachedLayoutFingerprint) {
      return;
    }
    cachedLayoutFingerprint = layout.fingerprint;
    empty.style.display = "none";
    const canvas = el<HTMLCanvasElement>("map-canvas");
    canvas.style.display = "block";
    map = new HashtagMap(canvas, layout, el("map-tooltip"));
    map.render();
    el("map-meta").textContent =
      `${layout.points.length} tags · perplexity ${layout.perplexity} · ` +
      `fingerprint ${layout.fingerprint.slice(0, 12)}`;
  } catch (err) {
    if (err instanceof ApiError && err.code === "LayoutNotBuilt") {
      empty.style.display = "block";
      empty.textContent =
        "No hashtag layout yet. Build one with: " +
        "tweetsift viz layout --corpus <dir> --model model.bin --out <dir>/layout.csv";
      return;
    }
    empty.style.display = "block";
    empty.textContent = String(err);
  }
}

function wire(): void {
  el("tab-label").addEventListener("click", () => showTab("label"));
  el("tab-map").addEventListener("click", () => showTab("map"));
  el<HTMLFormElement>("session-form").addEventListener("submit", (e) => void startSession(e));
  el<HTMLInputElement>("map-query").addEventListener("input", (event) => {
    map?.setQuery((event.target as HTMLInputElement).value);
  });
  el("map-reload").addEventListener("click", () => void ensureMap(true));
  showTab("label");
}

document.addEventListener("DOMContentLoaded", wire);
