import { describe, expect, it } from "vitest";

import { AQI_BANDS, colorForAqi } from "../src/colors.js";
import type { GridResponse } from "../src/types.js";
import gridFixture from "./fixtures/grid.json";

describe("AQI color scale", () => {
  it("is the documented six-band palette", () => {
    expect(AQI_BANDS.length).toBe(6);
    expect(AQI_BANDS.map((b) => b.upper)).toEqual([50, 100, 150, 200, 300, Infinity]);
  });

  it("maps sampled grid cells through the scale function", () => {
    const grid = gridFixture as unknown as GridResponse;
    // independent band lookup written out by hand
    const oracle = (v: number) =>
      v <= 50 ? "#00e400"
      : v <= 100 ? "#ffff00"
      : v <= 150 ? "#ff7e00"
      : v <= 200 ? "#ff0000"
      : v <= 300 ? "#8f3f97"
      : "#7e0023";
    for (const value of grid.values) {
      expect(colorForAqi(value)).toBe(oracle(value));
    }
  });

  it("covers band boundaries exactly", () => {
    expect(colorForAqi(0)).toBe("#00e400");
    expect(colorForAqi(50)).toBe("#00e400");
    expect(colorForAqi(50.0001)).toBe("#ffff00");
    expect(colorForAqi(300)).toBe("#8f3f97");
    expect(colorForAqi(301)).toBe("#7e0023");
    expect(colorForAqi(500)).toBe("#7e0023");
  });
});
