import { describe, expect, it } from "vitest";

import { HashEncoder, createEncoder } from "../src/encoders.js";

describe("HashEncoder", () => {
  it("is deterministic for a fixed seed", async () => {
    const a = await new HashEncoder(8, 7).encode(["alpha", "beta"]);
    const b = await new HashEncoder(8, 7).encode(["alpha", "beta"]);
    expect(a).toEqual(b);
  });

  it("gives identical tokens identical rows", async () => {
    const rows = await new HashEncoder(6).encode(["x", "y", "x"]);
    expect(rows[0]).toEqual(rows[2]);
    expect(rows[0]).not.toEqual(rows[1]);
  });

  it("changes with the seed", async () => {
    const a = await new HashEncoder(6, 1).encode(["x"]);
    const b = await new HashEncoder(6, 2).encode(["x"]);
    expect(a).not.toEqual(b);
  });

  it("emits values in [-1, 1)", async () => {
    const rows = await new HashEncoder(16).encode(["lorem", "ipsum", "dolor"]);
    for (const row of rows) {
      expect(row).toHaveLength(16);
      for (const v of row) {
        expect(v).toBeGreaterThanOrEqual(-1);
        expect(v).toBeLessThan(1);
      }
    }
  });
});

describe("createEncoder", () => {
  it("parses hash specs", () => {
    expect(createEncoder("hash:12").hiddenDim).toBe(12);
    expect(createEncoder("hash:12:99").name).toBe("hash:12:99");
  });

  it("rejects unknown backends", () => {
    expect(() => createEncoder("word2vec")).toThrow(/unknown encoder/);
    expect(() => createEncoder("hash:0")).toThrow(/positive/);
    expect(() => createEncoder("hf:")).toThrow(/hf:<model-id>/);
  });
});
