/** In-memory stand-in for the review service with the same status
 * semantics: compare-and-set ticket review, registry-gated issue. */

import type { FetchLike, Ticket } from "../src/api.js";

export interface MockWorld {
  irregularities: Array<{
    id: string;
    type: string;
    lat: number;
    lon: number;
    sequence_id: string;
    anchor_frame: number;
    severity: string | null;
    evidence: number[];
  }>;
  tickets: Ticket[];
  registry: Set<string>;
  laneFeatures: unknown[];
  potholeFeatures: unknown[];
  warnings: Array<{ rule_id: number; metric: string; threshold: number; direction: string; value: number }>;
  unreachable?: boolean;
}

export function defaultWorld(): MockWorld {
  const mk = (i: number, type: string, lat: number): MockWorld["irregularities"][number] => ({
    id: `seq-a/${type}/${i}`,
    type,
    lat,
    lon: 0.001 * i,
    sequence_id: "seq-a",
    anchor_frame: 100 + i,
    severity: null,
    evidence: [100 + i, 101 + i],
  });
  const ticket = (id: string, plate: string | null): Ticket => ({
    id: `run-1:seq-a-grp-${id}`,
    run_id: "run-1",
    group_id: `seq-a-grp-${id}`,
    sequence_id: "seq-a",
    plate_text: plate,
    status: "pending",
    n_riders: 1,
    n_no_helmet: 1,
    first_frame: 10,
    last_frame: 30,
    evidence_frames: [10, 15, 20, 25, 30],
    reviewer_note: null,
  });
  const line = (start: number, label: string, kind: string) => ({
    type: "Feature",
    geometry: {
      type: "LineString",
      coordinates: [
        [0.0, start / 111_000],
        [0.0, (start + 50) / 111_000],
      ],
    },
    properties: { sequence_id: "seq-a", kind, start_m: start, end_m: start + 50, class: label },
  });
  return {
    irregularities: [
      mk(0, "pothole", 0.001),
      mk(1, "pothole", 0.002),
      mk(2, "defective_sign", 0.003),
      mk(3, "helmet_violation", 0.004),
    ],
    tickets: [ticket("7", "KA01AB"), ticket("9", "KA09ZZ"), ticket("11", null)],
    registry: new Set(["KA01AB"]),
    laneFeatures: [line(0, "fair", "lane"), line(50, "faded", "lane"), line(100, "absent", "lane")],
    potholeFeatures: [line(0, "fair", "pothole"), line(100, "poor", "pothole")],
    warnings: [],
  };
}

export function mockFetch(world: MockWorld): FetchLike {
  const json = (body: unknown, status = 200) =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  const error = (status: number, detail: string) => json({ detail }, status);

  return async (input: string, init?: RequestInit) => {
    if (world.unreachable) throw new TypeError("fetch failed");
    const url = new URL(input, "http://mock");
    const path = url.pathname;

    if (path === "/irregularities") {
      const type = url.searchParams.get("type");
      return json(world.irregularities.filter((i) => type === null || i.type === type));
    }
    if (path === "/irregularities.geojson") {
      const type = url.searchParams.get("type");
      return json({
        type: "FeatureCollection",
        features: world.irregularities
          .filter((i) => type === null || i.type === type)
          .map((i) => ({
            type: "Feature",
            geometry: { type: "Point", coordinates: [i.lon, i.lat] },
            properties: {
              id: i.id, type: i.type, sequence_id: i.sequence_id,
              anchor_frame: i.anchor_frame, severity: i.severity,
            },
          })),
      });
    }
    if (path === "/heatmap") {
      const type = url.searchParams.get("type");
      const items = world.irregularities.filter((i) => i.type === type);
      const cells = items.map((i) => ({ lat: i.lat, lon: i.lon, count: 1 }));
      return json({
        type, cell_size_m: Number(url.searchParams.get("cell_size_m") ?? 250),
        cells, total: items.length,
      });
    }
    if (path === "/stretches.geojson") {
      const kind = url.searchParams.get("kind");
      const features =
        kind === "lane" ? world.laneFeatures :
        kind === "pothole" ? world.potholeFeatures :
        [...world.laneFeatures, ...world.potholeFeatures];
      return json({ type: "FeatureCollection", features });
    }
    if (path === "/tickets") {
      const status = url.searchParams.get("status");
      return json(world.tickets.filter((t) => status === null || t.status === status));
    }
    const review = path.match(/^\/tickets\/(.+)\/review$/);
    if (review && init?.method === "POST") {
      const ticket = world.tickets.find((t) => t.id === decodeURIComponent(review[1]!));
      if (!ticket) return error(404, "ticket not found");
      if (ticket.status !== "pending") return error(409, `ticket already ${ticket.status}`);
      const body = JSON.parse(String(init.body)) as { action: string; note: string };
      if (body.action === "issue") {
        if (!ticket.plate_text) return error(422, "ticket has no plate to issue against");
        if (!world.registry.has(ticket.plate_text)) {
          return error(422, `plate '${ticket.plate_text}' not in registry`);
        }
        ticket.status = "issued";
      } else if (body.action === "reject") {
        ticket.status = "rejected";
      } else {
        return error(422, `action must be issue or reject`);
      }
      ticket.reviewer_note = body.note;
      return json(ticket);
    }
    const single = path.match(/^\/tickets\/(.+)$/);
    if (single) {
      const ticket = world.tickets.find((t) => t.id === decodeURIComponent(single[1]!));
      return ticket ? json(ticket) : error(404, "ticket not found");
    }
    if (path === "/warnings") return json(world.warnings);
    if (path === "/report") return json({ helmet_violation_pct: 45.9 });
    return error(404, `no mock for ${path}`);
  };
}
