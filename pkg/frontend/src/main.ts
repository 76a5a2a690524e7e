/** Browser entry point: Leaflet map, layer toggles, legend, hotspot
 * drill-down, ticket review queue, and the warning banner. */

import { ApiClient, ServiceError, Ticket } from "./api.js";
import { warningLines } from "./banner.js";
import {
  IRREGULARITY_TYPES,
  LANE_LEGEND,
  POTHOLE_LEGEND,
  heatPoints,
  legendCounts,
  markerColor,
  markersFromGeojson,
  stretchColor,
  stretchLines,
} from "./layers.js";
import { MapViewState, LayerKey, itemsInCell } from "./state.js";
import { TicketQueue } from "./tickets.js";

declare const L: typeof import("leaflet");

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8000";
const HEAT_CELL_M = 250;

const api = new ApiClient(SERVICE_URL);
const state = new MapViewState();
const queue = new TicketQueue(api);

const map = L.map("map").setView([0, 0], 13);
L.tileLayer("https://{s}.tile.openstreetmap.org/{z}/{x}/{y}.png", {
  attribution: "&copy; OpenStreetMap contributors",
  maxZoom: 19,
}).addTo(map);

const layerGroups = new Map<LayerKey, L.LayerGroup>();

function groupFor(key: LayerKey): L.LayerGroup {
  let group = layerGroups.get(key);
  if (!group) {
    group = L.layerGroup();
    layerGroups.set(key, group);
  }
  return group;
}

function banner(kind: "error" | "warning", lines: string[]): void {
  const el = document.getElementById(`${kind}-banner`)!;
  el.textContent = lines.join(" | ");
  el.style.display = lines.length ? "block" : "none";
}

async function loadLayers(): Promise<void> {
  try {
    const [irregular, laneFc, holeFc, heat] = await Promise.all([
      api.irregularitiesGeojson(),
      api.stretchesGeojson("lane"),
      api.stretchesGeojson("pothole"),
      api.heatmap("helmet_violation", HEAT_CELL_M),
    ]);

    const markers = markersFromGeojson(irregular);
    state.loadMarkers(markers);
    for (const [, group] of layerGroups) group.clearLayers();

    for (const m of markers) {
      const dot = L.circleMarker([m.lat, m.lon], {
        radius: 6,
        color: markerColor(m.type),
        fillOpacity: 0.8,
      }).bindPopup(`${m.type} @ frame ${m.id}`);
      dot.on("click", () => showDetail(m.id));
      groupFor(m.type as LayerKey).addLayer(dot);
    }

    for (const line of stretchLines(laneFc)) {
      groupFor("lane_stretches").addLayer(
        L.polyline(line.coords, { color: stretchColor(line.label), weight: 4 }),
      );
    }
    for (const line of stretchLines(holeFc)) {
      groupFor("pothole_stretches").addLayer(
        L.polyline(line.coords, { color: stretchColor(line.label), weight: 4 }),
      );
    }

    const cells = heatPoints(heat);
    for (const cell of cells) {
      const blob = L.circleMarker([cell.lat, cell.lon], {
        radius: 8 + 4 * Math.log2(1 + cell.count),
        color: "#d32f2f",
        stroke: false,
        fillOpacity: 0.35,
      });
      blob.on("click", () => showHotspot(cell, HEAT_CELL_M));
      groupFor("heatmap").addLayer(blob);
    }

    if (markers.length > 0) {
      const first = markers[0]!;
      if (state.viewport.center[0] === 0 && state.viewport.center[1] === 0) {
        map.setView([first.lat, first.lon], 14);
        state.viewport = { center: [first.lat, first.lon], zoom: 14 };
      }
    }

    renderLegend(laneFc, holeFc);
    banner("error", []);
  } catch (err) {
    state.markStale();
    const message =
      err instanceof ServiceError && err.unreachable
        ? `service unreachable at ${SERVICE_URL}; showing stale data`
        : `failed to load layers: ${String(err)}`;
    banner("error", [message]);
  }
}

function renderLegend(laneFc: Parameters<typeof stretchLines>[0], holeFc: Parameters<typeof stretchLines>[0]): void {
  const el = document.getElementById("legend")!;
  const lane = legendCounts(stretchLines(laneFc), LANE_LEGEND);
  const holes = legendCounts(stretchLines(holeFc), POTHOLE_LEGEND);
  el.innerHTML =
    "<b>Lanes</b> " +
    lane.map((r) => `${r.label}: ${r.count}`).join(", ") +
    "<br><b>Surface</b> " +
    holes.map((r) => `${r.label}: ${r.count}`).join(", ");
}

function showDetail(id: string): void {
  state.select(id);
  const m = state.getMarker(id)!;
  const el = document.getElementById("detail")!;
  el.innerHTML =
    `<b>${m.type}</b> (${m.severity ?? "n/a"})<br>` +
    `sequence ${id.split("/")[0]}<br>lat ${m.lat.toFixed(6)}, lon ${m.lon.toFixed(6)}`;
}

function showHotspot(cell: { lat: number; lon: number; count: number }, cellSizeM: number): void {
  const items = itemsInCell(state.visibleMarkers(), cell, cellSizeM);
  const el = document.getElementById("detail")!;
  el.innerHTML =
    `<b>hotspot</b> (${cell.count} finding${cell.count === 1 ? "" : "s"})<br>` +
    items.map((m) => `${m.type} — ${m.id}`).join("<br>");
}

function wireToggles(): void {
  const host = document.getElementById("layer-toggles")!;
  const keys: LayerKey[] = [
    ...IRREGULARITY_TYPES,
    "lane_stretches",
    "pothole_stretches",
    "heatmap",
  ];
  for (const key of keys) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = key !== "heatmap";
    label.append(box, ` ${key.replace(/_/g, " ")}`);
    host.append(label);
    const apply = () => {
      const on = state.toggleLayer(key, box.checked);
      const group = groupFor(key);
      if (on) group.addTo(map);
      else map.removeLayer(group);
    };
    box.addEventListener("change", apply);
    apply();
  }
}

async function renderQueue(notice = ""): Promise<void> {
  const host = document.getElementById("tickets")!;
  host.innerHTML = notice ? `<p class="notice">${notice}</p>` : "";
  for (const item of queue.all()) {
    const t = item.ticket;
    const card = document.createElement("div");
    card.className = `ticket ${t.status}`;
    card.innerHTML =
      `<b>${t.plate_text ?? "no plate"}</b> — ${t.status}<br>` +
      `${t.n_no_helmet}/${t.n_riders} rider(s) without helmet, ` +
      `frames ${t.first_frame}-${t.last_frame}<br>` +
      `<span class="evidence">evidence: ${t.evidence_frames.join(", ")}</span>`;
    // Evidence stills are frame references into the archived run; once the
    // list is rendered the reviewer has seen them.
    queue.markEvidenceLoaded(t.id);

    if (t.status === "pending") {
      for (const action of ["issue", "reject"] as const) {
        const btn = document.createElement("button");
        btn.textContent = action;
        btn.disabled = !queue.canAct(t.id);
        btn.addEventListener("click", async () => {
          const outcome = await queue.review(t.id, action);
          if (outcome.kind === "conflict") {
            await renderQueue(`ticket was already reviewed elsewhere: ${outcome.message}`);
          } else if (outcome.kind === "blocked") {
            await renderQueue(`cannot ${action}: ${outcome.message}`);
          } else if (outcome.kind === "unreachable") {
            banner("error", [outcome.message]);
          } else {
            await renderQueue();
          }
        });
        card.append(btn);
      }
    }
    host.append(card);
  }
}

async function loadWarnings(): Promise<void> {
  try {
    banner("warning", warningLines(await api.warnings()));
  } catch {
    // the error banner from loadLayers already covers unreachability
  }
}

async function boot(): Promise<void> {
  wireToggles();
  await loadLayers();
  try {
    await queue.refresh();
    await renderQueue();
  } catch (err) {
    banner("error", [`ticket queue unavailable: ${String(err)}`]);
  }
  await loadWarnings();
  document.getElementById("refresh")!.addEventListener("click", async () => {
    await loadLayers();
    await queue.refresh();
    await renderQueue();
    await loadWarnings();
  });
}

boot();
