import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { markersFromGeojson } from "../src/layers.js";
import { MapViewState, itemsInCell } from "../src/state.js";
import { defaultWorld, mockFetch } from "./mock_service.js";

async function loadedState() {
  const api = new ApiClient("http://mock", mockFetch(defaultWorld()));
  const state = new MapViewState();
  state.loadMarkers(markersFromGeojson(await api.irregularitiesGeojson()));
  return state;
}

describe("layer toggling", () => {
  it("removes exactly the toggled layer's markers", async () => {
    const state = await loadedState();
    state.toggleLayer("pothole", true);
    state.toggleLayer("defective_sign", true);
    state.toggleLayer("helmet_violation", true);
    const before = state.visibleMarkers();

    state.toggleLayer("pothole", false);
    const after = state.visibleMarkers();
    const removed = before.filter((m) => !after.includes(m));
    expect(removed.every((m) => m.type === "pothole")).toBe(true);
    expect(after.some((m) => m.type === "defective_sign")).toBe(true);
    expect(after.some((m) => m.type === "helmet_violation")).toBe(true);
  });

  it("toggle without argument flips", async () => {
    const state = await loadedState();
    expect(state.toggleLayer("heatmap")).toBe(true);
    expect(state.toggleLayer("heatmap")).toBe(false);
    expect(state.activeLayers.has("heatmap")).toBe(false);
  });
});

describe("selection invariant", () => {
  it("only loaded ids are selectable", async () => {
    const state = await loadedState();
    state.select("seq-a/pothole/0");
    expect(state.selectedId).toBe("seq-a/pothole/0");
    expect(() => state.select("seq-a/pothole/999")).toThrow(/unknown item/);
    expect(state.selectedId).toBe("seq-a/pothole/0");
  });

  it("reload drops selections that vanished", async () => {
    const state = await loadedState();
    state.select("seq-a/pothole/0");
    state.loadMarkers([]);
    expect(state.selectedId).toBeNull();
  });

  it("reload clears the stale flag", async () => {
    const state = await loadedState();
    state.markStale();
    expect(state.staleData).toBe(true);
    state.loadMarkers([]);
    expect(state.staleData).toBe(false);
  });
});

describe("hotspot drill-down", () => {
  it("returns the items inside the clicked cell", async () => {
    const state = await loadedState();
    for (const key of ["pothole", "defective_sign", "helmet_violation"] as const) {
      state.toggleLayer(key, true);
    }
    const target = state.visibleMarkers()[0]!;
    const items = itemsInCell(state.visibleMarkers(), { lat: target.lat, lon: target.lon }, 50);
    expect(items).toContain(target);
    const far = itemsInCell(state.visibleMarkers(), { lat: target.lat + 1.0, lon: 0 }, 50);
    expect(far).toHaveLength(0);
  });
});
