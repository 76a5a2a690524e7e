/** Pure translation of service GeoJSON into renderable layer specs.
 * Keeping this free of Leaflet lets tests count exactly what would be
 * drawn, and the map adapter stays a thin shell. */

import type { FeatureCollection, HeatmapResponse } from "./api.js";

export const IRREGULARITY_TYPES = [
  "pothole",
  "defective_sign",
  "missing_street_light",
  "helmet_violation",
  "lane_marking_absent",
] as const;

export type IrregularityType = (typeof IRREGULARITY_TYPES)[number];

// Classification vocabularies, in legend order.
export const LANE_LEGEND = ["fair", "faded", "absent"] as const;
export const POTHOLE_LEGEND = ["poor", "average", "fair"] as const;

export interface MarkerSpec {
  id: string;
  type: string;
  lat: number;
  lon: number;
  severity: string | null;
}

export interface HeatPoint {
  lat: number;
  lon: number;
  count: number;
}

export interface StretchLine {
  kind: string;
  label: string | null;
  coords: [number, number][]; // [lat, lon] pairs, Leaflet order
  startM: number;
  endM: number;
}

export function markersFromGeojson(fc: FeatureCollection): MarkerSpec[] {
  const out: MarkerSpec[] = [];
  for (const feature of fc.features) {
    if (feature.geometry.type !== "Point") continue;
    const [lon, lat] = feature.geometry.coordinates as [number, number];
    const props = feature.properties;
    out.push({
      id: String(props.id),
      type: String(props.type),
      lat,
      lon,
      severity: props.severity == null ? null : String(props.severity),
    });
  }
  return out;
}

export function heatPoints(response: HeatmapResponse): HeatPoint[] {
  return response.cells.map((c) => ({ lat: c.lat, lon: c.lon, count: c.count }));
}

export function stretchLines(fc: FeatureCollection): StretchLine[] {
  const out: StretchLine[] = [];
  for (const feature of fc.features) {
    if (feature.geometry.type !== "LineString") continue;
    const coords = (feature.geometry.coordinates as [number, number][]).map(
      ([lon, lat]) => [lat, lon] as [number, number],
    );
    const props = feature.properties;
    out.push({
      kind: String(props.kind),
      label: props.class == null ? null : String(props.class),
      coords,
      startM: Number(props.start_m),
      endM: Number(props.end_m),
    });
  }
  return out;
}

/** Legend rows: one count per vocabulary entry plus an overall total. */
export function legendCounts(
  lines: StretchLine[],
  vocabulary: readonly string[],
): { label: string; count: number }[] {
  const rows = vocabulary.map((label) => ({
    label,
    count: lines.filter((l) => l.label === label).length,
  }));
  rows.push({ label: "total", count: lines.length });
  return rows;
}

const STRETCH_COLORS: Record<string, string> = {
  fair: "#2e7d32",
  faded: "#f9a825",
  absent: "#c62828",
  average: "#f9a825",
  poor: "#c62828",
};

const MARKER_COLORS: Record<string, string> = {
  pothole: "#c62828",
  defective_sign: "#ef6c00",
  missing_street_light: "#6a1b9a",
  helmet_violation: "#1565c0",
  lane_marking_absent: "#f9a825",
};

export function stretchColor(label: string | null): string {
  return (label && STRETCH_COLORS[label]) || "#9e9e9e";
}

export function markerColor(type: string): string {
  return MARKER_COLORS[type] ?? "#455a64";
}
