import { describe, expect, it } from "vitest";

import { warningLines } from "../src/banner.js";

describe("warning banner", () => {
  it("renders service warnings verbatim, no client thresholds", () => {
    const lines = warningLines([
      { rule_id: 1, metric: "helmet_violation_pct", threshold: 40, direction: "above", value: 45.9 },
    ]);
    expect(lines).toHaveLength(1);
    expect(lines[0]).toContain("helmet_violation_pct");
    expect(lines[0]).toContain("45.9");
    expect(lines[0]).toContain("above");
  });

  it("empty warnings render nothing", () => {
    expect(warningLines([])).toHaveLength(0);
  });
});
