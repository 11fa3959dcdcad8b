import { describe, expect, it } from "vitest";

import { buildVerdict, VerdictValidationError } from "../src/schema.js";

describe("buildVerdict", () => {
  it("includes mp for multi-frame samples", () => {
    const payload = buildVerdict("s1", "r1", { mg: true, ta: false, mp: true }, 5);
    expect(payload).toEqual({
      sample_id: "s1",
      reviewer_id: "r1",
      mg: true,
      ta: false,
      mp: true,
    });
  });

  it("omits mp for single-frame samples", () => {
    const payload = buildVerdict("s1", "r1", { mg: true, ta: true, mp: null }, 1);
    expect("mp" in payload).toBe(false);
  });

  it("rejects a fabricated mp on a single-frame sample", () => {
    expect(() => buildVerdict("s1", "r1", { mg: true, ta: true, mp: false }, 1)).toThrow(
      VerdictValidationError,
    );
  });

  it("rejects a missing mp on a multi-frame sample", () => {
    expect(() => buildVerdict("s1", "r1", { mg: true, ta: true, mp: null }, 3)).toThrow(
      VerdictValidationError,
    );
  });

  it("rejects empty identifiers and bad frame counts", () => {
    expect(() => buildVerdict("", "r1", { mg: true, ta: true, mp: null }, 1)).toThrow();
    expect(() => buildVerdict("s1", "", { mg: true, ta: true, mp: null }, 1)).toThrow();
    expect(() => buildVerdict("s1", "r1", { mg: true, ta: true, mp: null }, 0)).toThrow();
  });
});
