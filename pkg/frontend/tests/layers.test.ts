import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  LANE_LEGEND,
  POTHOLE_LEGEND,
  heatPoints,
  legendCounts,
  markerColor,
  markersFromGeojson,
  stretchColor,
  stretchLines,
} from "../src/layers.js";
import { defaultWorld, mockFetch } from "./mock_service.js";

function client(world = defaultWorld()) {
  return new ApiClient("http://mock", mockFetch(world));
}

describe("marker layer", () => {
  it("renders one marker per service item", async () => {
    const world = defaultWorld();
    const api = client(world);
    const markers = markersFromGeojson(await api.irregularitiesGeojson());
    const items = await api.irregularities();
    expect(markers.length).toBe(items.length);
    expect(new Set(markers.map((m) => m.id))).toEqual(new Set(items.map((i) => i.id)));
  });

  it("type filter narrows both sides identically", async () => {
    const api = client();
    const markers = markersFromGeojson(await api.irregularitiesGeojson({ type: "pothole" }));
    const items = await api.irregularities({ type: "pothole" });
    expect(markers.length).toBe(items.length);
    expect(markers.every((m) => m.type === "pothole")).toBe(true);
  });

  it("swaps GeoJSON lon/lat into lat/lon", async () => {
    const api = client();
    const [first] = markersFromGeojson(await api.irregularitiesGeojson());
    const [item] = await api.irregularities();
    expect(first!.lat).toBe(item!.lat);
    expect(first!.lon).toBe(item!.lon);
  });
});

describe("heatmap layer", () => {
  it("cell counts sum to the service total", async () => {
    const api = client();
    const heat = await api.heatmap("pothole", 250);
    const points = heatPoints(heat);
    expect(points.reduce((acc, p) => acc + p.count, 0)).toBe(heat.total);
    const items = await api.irregularities({ type: "pothole" });
    expect(heat.total).toBe(items.length);
  });
});

describe("stretch layer", () => {
  it("converts LineStrings and keeps classification labels", async () => {
    const api = client();
    const lines = stretchLines(await api.stretchesGeojson("lane"));
    expect(lines.length).toBe(3);
    expect(lines.map((l) => l.label)).toEqual(["fair", "faded", "absent"]);
    for (const line of lines) {
      expect(line.coords.length).toBeGreaterThanOrEqual(2);
    }
  });

  it("legend uses the classification vocabularies", async () => {
    const api = client();
    const lane = legendCounts(stretchLines(await api.stretchesGeojson("lane")), LANE_LEGEND);
    expect(lane.map((r) => r.label)).toEqual(["fair", "faded", "absent", "total"]);
    expect(lane.find((r) => r.label === "total")!.count).toBe(3);

    const holes = legendCounts(
      stretchLines(await api.stretchesGeojson("pothole")),
      POTHOLE_LEGEND,
    );
    expect(holes.map((r) => r.label)).toEqual(["poor", "average", "fair", "total"]);
    expect(holes.find((r) => r.label === "poor")!.count).toBe(1);
  });

  it("colors cover every vocabulary entry", () => {
    for (const label of [...LANE_LEGEND, ...POTHOLE_LEGEND]) {
      expect(stretchColor(label)).toMatch(/^#/);
    }
    expect(stretchColor(null)).toMatch(/^#/);
    expect(markerColor("pothole")).not.toBe(markerColor("helmet_violation"));
  });
});
