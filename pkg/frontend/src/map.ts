import type { LayoutPoint, LayoutResponse } from "./types.js";

export const ZOOM_MIN = 0.1;
export const ZOOM_MAX = 64;

export interface MapViewState {
  centerX: number;
  centerY: number;
  zoom: number;
  query: string;
}

export interface SceneMarker {
  tag: string;
  frequency: number;
  sx: number;
  sy: number;
  radius: number;
  highlighted: boolean;
}

/** Tags whose text contains the query, case-insensitive. */
export function highlightedTags(points: readonly LayoutPoint[], query: string): Set<string> {
  const needle = query.trim().toLowerCase();
  const out = new Set<string>();
  for (const point of points) {
    if (needle === "" || point.tag.toLowerCase().includes(needle)) {
      out.add(point.tag);
    }
  }
  return out;
}

/** Marker radius grows with log frequency so mega-tags cannot occlude. */
export function markerRadius(frequency: number, base = 3): number {
  return base + 2.2 * Math.log10(Math.max(frequency, 1));
}

export function fitView(points: readonly LayoutPoint[], query = ""): MapViewState {
  if (points.length === 0) {
    return { centerX: 0, centerY: 0, zoom: 1, query };
  }
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  return {
    centerX: (Math.min(...xs) + Math.max(...xs)) / 2,
    centerY: (Math.min(...ys) + Math.max(...ys)) / 2,
    zoom: 1,
    query,
  };
}

function worldScale(points: readonly LayoutPoint[], width: number, height: number): number {
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const spanX = Math.max(...xs) - Math.min(...xs) || 1;
  const spanY = Math.max(...ys) - Math.min(...ys) || 1;
  return 0.9 * Math.min(width / spanX, height / spanY);
}

/**
 * Pure scene computation: identical (layout, view, size) inputs produce an
 * identical marker list. Rendering only draws what this returns.
 */
export function computeScene(
  layout: Pick<LayoutResponse, "points">,
  view: MapViewState,
  width: number,
  height: number
): SceneMarker[] {
  const scale = worldScale(layout.points, width, height) * view.zoom;
  const lit = highlightedTags(layout.points, view.query);
  return layout.points.map((point) => ({
    tag: point.tag,
    frequency: point.frequency,
    sx: width / 2 + (point.x - view.centerX) * scale,
    sy: height / 2 - (point.y - view.centerY) * scale,
    radius: markerRadius(point.frequency),
    highlighted: lit.has(point.tag),
  }));
}

export function clampZoom(zoom: number): number {
  return Math.min(ZOOM_MAX, Math.max(ZOOM_MIN, zoom));
}

/** Wheel zoom about a screen point: the world point under the cursor stays put. */
export function zoomAt(
  view: MapViewState,
  points: readonly LayoutPoint[],
  factor: number,
  sx: number,
  sy: number,
  width: number,
  height: number
): MapViewState {
  const zoom = clampZoom(view.zoom * factor);
  if (zoom === view.zoom) {
    return view;
  }
  const base = worldScale(points, width, height);
  const before = base * view.zoom;
  const after = base * zoom;
  const wx = view.centerX + (sx - width / 2) / before;
  const wy = view.centerY - (sy - height / 2) / before;
  return {
    centerX: wx - (sx - width / 2) / after,
    centerY: wy + (sy - height / 2) / after,
    zoom,
    query: view.query,
  };
}

export function pan(
  view: MapViewState,
  points: readonly LayoutPoint[],
  dxPixels: number,
  dyPixels: number,
  width: number,
  height: number
): MapViewState {
  const scale = worldScale(points, width, height) * view.zoom;
  return {
    ...view,
    centerX: view.centerX - dxPixels / scale,
    centerY: view.centerY + dyPixels / scale,
  };
}

export function markerAt(scene: readonly SceneMarker[], sx: number, sy: number): SceneMarker | null {
  let best: SceneMarker | null = null;
  let bestDist = Infinity;
  for (const marker of scene) {
    const d = Math.hypot(marker.sx - sx, marker.sy - sy);
    if (d <= marker.radius + 3 && d < bestDist) {
      best = marker;
      bestDist = d;
    }
  }
  return best;
}

/** Canvas binding: wheel zoom, drag pan, query box, hover tooltip. */
export class HashtagMap {
  view: MapViewState;
  private dragging: { sx: number; sy: number } | null = null;
  private hover: SceneMarker | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private layout: LayoutResponse,
    private tooltip: HTMLElement | null = null
  ) {
    this.view = fitView(layout.points);
    canvas.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = event.deltaY < 0 ? 1.2 : 1 / 1.2;
      this.view = zoomAt(
        this.view,
        this.layout.points,
        factor,
        event.offsetX,
        event.offsetY,
        canvas.width,
        canvas.height
      );
      this.render();
    });
    canvas.addEventListener("mousedown", (event) => {
      this.dragging = { sx: event.offsetX, sy: event.offsetY };
    });
    canvas.addEventListener("mousemove", (event) => {
      if (this.dragging) {
        this.view = pan(
          this.view,
          this.layout.points,
          event.offsetX - this.dragging.sx,
          event.offsetY - this.dragging.sy,
          canvas.width,
          canvas.height
        );
        this.dragging = { sx: event.offsetX, sy: event.offsetY };
        this.render();
      } else {
        const scene = computeScene(this.layout, this.view, canvas.width, canvas.height);
        this.hover = markerAt(scene, event.offsetX, event.offsetY);
        this.renderTooltip(event.offsetX, event.offsetY);
      }
    });
    canvas.addEventListener("mouseup", () => {
      this.dragging = null;
    });
    canvas.addEventListener("mouseleave", () => {
      this.dragging = null;
      this.hover = null;
      this.renderTooltip(0, 0);
    });
  }

  setQuery(query: string): void {
    this.view = { ...this.view, query };
    this.render();
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) {
      return;
    }
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const scene = computeScene(this.layout, this.view, width, height);
    for (const marker of scene) {
      ctx.beginPath();
      ctx.arc(marker.sx, marker.sy, marker.radius, 0, Math.PI * 2);
      ctx.fillStyle = marker.highlighted ? "rgba(214, 69, 65, 0.85)" : "rgba(120, 130, 150, 0.18)";
      ctx.fill();
    }
    if (this.view.zoom >= 4) {
      ctx.font = "11px sans-serif";
      ctx.fillStyle = "#333";
      for (const marker of scene) {
        if (marker.highlighted) {
          ctx.fillText(`#${marker.tag}`, marker.sx + marker.radius + 2, marker.sy + 3);
        }
      }
    }
  }

  private renderTooltip(sx: number, sy: number): void {
    if (!this.tooltip) {
      return;
    }
    if (this.hover) {
      this.tooltip.style.display = "block";
      this.tooltip.style.left = `${sx + 12}px`;
      this.tooltip.style.top = `${sy + 12}px`;
      this.tooltip.textContent = `#${this.hover.tag} · ${this.hover.frequency} tweets`;
    } else {
      this.tooltip.style.display = "none";
    }
  }
}
