/** Map view state: viewport, active layers, and the selected item.
 * The loaded data is the single source of truth; selections can only
 * reference ids that exist in it. */

import type { MarkerSpec } from "./layers.js";

export type LayerKey =
  | "pothole"
  | "defective_sign"
  | "missing_street_light"
  | "helmet_violation"
  | "lane_marking_absent"
  | "lane_stretches"
  | "pothole_stretches"
  | "heatmap";

export interface Viewport {
  center: [number, number];
  zoom: number;
}

export class MapViewState {
  viewport: Viewport = { center: [0, 0], zoom: 13 };
  private active = new Set<LayerKey>();
  private markers = new Map<string, MarkerSpec>();
  private selected: string | null = null;
  staleData = false;

  get activeLayers(): ReadonlySet<LayerKey> {
    return this.active;
  }

  get selectedId(): string | null {
    return this.selected;
  }

  toggleLayer(key: LayerKey, on?: boolean): boolean {
    const enable = on ?? !this.active.has(key);
    if (enable) this.active.add(key);
    else this.active.delete(key);
    return enable;
  }

  /** Replace loaded markers; a selection that no longer exists is dropped. */
  loadMarkers(markers: MarkerSpec[]): void {
    this.markers = new Map(markers.map((m) => [m.id, m]));
    if (this.selected !== null && !this.markers.has(this.selected)) {
      this.selected = null;
    }
    this.staleData = false;
  }

  select(id: string | null): void {
    if (id !== null && !this.markers.has(id)) {
      throw new Error(`cannot select unknown item ${id}`);
    }
    this.selected = id;
  }

  getMarker(id: string): MarkerSpec | undefined {
    return this.markers.get(id);
  }

  /** Markers on currently active irregularity layers. */
  visibleMarkers(): MarkerSpec[] {
    return [...this.markers.values()].filter((m) => this.active.has(m.type as LayerKey));
  }

  markStale(): void {
    this.staleData = true;
  }
}

/** Hotspot drill-down: items inside one heat cell, for a click handler. */
export function itemsInCell(
  markers: MarkerSpec[],
  cell: { lat: number; lon: number },
  cellSizeM: number,
): MarkerSpec[] {
  const mPerDegLat = 111_194.9;
  const halfLat = cellSizeM / 2 / mPerDegLat;
  const mPerDegLon = mPerDegLat * Math.cos((cell.lat * Math.PI) / 180);
  const halfLon = cellSizeM / 2 / mPerDegLon;
  return markers.filter(
    (m) => Math.abs(m.lat - cell.lat) <= halfLat && Math.abs(m.lon - cell.lon) <= halfLon,
  );
}
