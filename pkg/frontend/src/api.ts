/** Typed client for the roadaudit review service. All state shown in the
 * dashboard comes from these calls; nothing is derived client-side. */

export interface Irregularity {
  id: string;
  type: string;
  lat: number;
  lon: number;
  sequence_id: string;
  anchor_frame: number;
  severity: string | null;
  evidence: number[];
}

export interface HeatmapCell {
  lat: number;
  lon: number;
  count: number;
}

export interface HeatmapResponse {
  type: string;
  cell_size_m: number;
  cells: HeatmapCell[];
  total: number;
}

export interface SafetyReport {
  sign_visibility_mean_m: number | null;
  defective_sign_pct: number | null;
  streetlight_gap_mean_m: number | null;
  lane_no_marking_pct: number | null;
  pothole_stretch_pct: number | null;
  helmet_violation_pct: number | null;
}

export type TicketStatus = "pending" | "issued" | "rejected";

export interface Ticket {
  id: string;
  run_id: string;
  group_id: string;
  sequence_id: string;
  plate_text: string | null;
  status: TicketStatus;
  n_riders: number;
  n_no_helmet: number;
  first_frame: number;
  last_frame: number;
  evidence_frames: number[];
  reviewer_note: string | null;
}

export interface ServiceWarning {
  rule_id: number;
  metric: string;
  threshold: number;
  direction: string;
  value: number;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: Array<{
    type: "Feature";
    geometry: { type: string; coordinates: unknown };
    properties: Record<string, unknown>;
  }>;
}

/** Thrown for transport failures and non-2xx responses alike, so callers
 * can surface one error banner with the service's own message. */
export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status: number | null,
    readonly unreachable: boolean,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ServiceError(`service unreachable: ${String(err)}`, null, true);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(detail, response.status, false);
    }
    return (await response.json()) as T;
  }

  irregularities(params: { type?: string; bbox?: string } = {}): Promise<Irregularity[]> {
    return this.request(`/irregularities${query(params)}`);
  }

  irregularitiesGeojson(params: { type?: string; bbox?: string } = {}): Promise<FeatureCollection> {
    return this.request(`/irregularities.geojson${query(params)}`);
  }

  heatmap(type: string, cellSizeM: number): Promise<HeatmapResponse> {
    return this.request(`/heatmap${query({ type, cell_size_m: String(cellSizeM) })}`);
  }

  heatmapGeojson(type: string, cellSizeM: number): Promise<FeatureCollection> {
    return this.request(`/heatmap.geojson${query({ type, cell_size_m: String(cellSizeM) })}`);
  }

  stretchesGeojson(kind: "lane" | "pothole"): Promise<FeatureCollection> {
    return this.request(`/stretches.geojson${query({ kind })}`);
  }

  report(): Promise<SafetyReport> {
    return this.request("/report");
  }

  tickets(status?: TicketStatus): Promise<Ticket[]> {
    return this.request(`/tickets${query(status ? { status } : {})}`);
  }

  ticket(id: string): Promise<Ticket> {
    return this.request(`/tickets/${id}`);
  }

  reviewTicket(id: string, action: "issue" | "reject", note = ""): Promise<Ticket> {
    return this.request(`/tickets/${id}/review`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ action, note }),
    });
  }

  warnings(): Promise<ServiceWarning[]> {
    return this.request("/warnings");
  }
}

function query(params: Record<string, string | undefined>): string {
  const pairs = Object.entries(params).filter(([, v]) => v !== undefined) as [string, string][];
  if (pairs.length === 0) return "";
  const qs = new URLSearchParams(pairs);
  return `?${qs.toString()}`;
}
