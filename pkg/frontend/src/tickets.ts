/** Ticket review queue. Status is never changed optimistically: every
 * transition comes from a confirmed server response, and review actions
 * stay disabled until the item's evidence has loaded. */

import { ApiClient, ServiceError, Ticket } from "./api.js";

export interface QueueItem {
  ticket: Ticket;
  evidenceLoaded: boolean;
}

export type ReviewOutcome =
  | { kind: "ok"; ticket: Ticket }
  | { kind: "conflict"; message: string; refreshed: true }
  | { kind: "blocked"; message: string }
  | { kind: "unreachable"; message: string };

export class TicketQueue {
  private items = new Map<string, QueueItem>();

  constructor(private readonly api: ApiClient) {}

  /** Pull the queue from the server, preserving evidence-loaded flags. */
  async refresh(): Promise<void> {
    const tickets = await this.api.tickets();
    const next = new Map<string, QueueItem>();
    for (const ticket of tickets) {
      const prev = this.items.get(ticket.id);
      next.set(ticket.id, { ticket, evidenceLoaded: prev?.evidenceLoaded ?? false });
    }
    this.items = next;
  }

  all(): QueueItem[] {
    return [...this.items.values()];
  }

  pending(): QueueItem[] {
    return this.all().filter((i) => i.ticket.status === "pending");
  }

  get(id: string): QueueItem | undefined {
    return this.items.get(id);
  }

  /** Called once the evidence stills for a ticket have rendered. */
  markEvidenceLoaded(id: string): void {
    const item = this.items.get(id);
    if (item) item.evidenceLoaded = true;
  }

  /** Review buttons stay disabled until evidence is on screen. */
  canAct(id: string): boolean {
    const item = this.items.get(id);
    return !!item && item.ticket.status === "pending" && item.evidenceLoaded;
  }

  async review(id: string, action: "issue" | "reject", note = ""): Promise<ReviewOutcome> {
    if (!this.canAct(id)) {
      return { kind: "blocked", message: "evidence not loaded or ticket not pending" };
    }
    try {
      const ticket = await this.api.reviewTicket(id, action, note);
      const prev = this.items.get(id);
      this.items.set(id, { ticket, evidenceLoaded: prev?.evidenceLoaded ?? true });
      return { kind: "ok", ticket };
    } catch (err) {
      if (err instanceof ServiceError && err.unreachable) {
        return { kind: "unreachable", message: err.message };
      }
      if (err instanceof ServiceError && err.status === 409) {
        // Someone else reviewed it; re-sync rather than guessing.
        await this.refresh();
        return { kind: "conflict", message: err.message, refreshed: true };
      }
      if (err instanceof ServiceError && err.status === 422) {
        return { kind: "blocked", message: err.message };
      }
      throw err;
    }
  }
}
