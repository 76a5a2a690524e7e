/** Warning banner content. Thresholds live server-side; the client only
 * renders what /warnings returns. */

import type { ServiceWarning } from "./api.js";

export function warningLines(warnings: ServiceWarning[]): string[] {
  return warnings.map((w) => {
    const rel = w.direction === "above" ? "above" : "below";
    return `${w.metric} is ${format(w.value)}, ${rel} the ${format(w.threshold)} threshold`;
  });
}

function format(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(1);
}

export interface BannerState {
  errors: string[];
  warnings: string[];
}

export function emptyBanner(): BannerState {
  return { errors: [], warnings: [] };
}
