import { describe, expect, it } from "vitest";

import type { AnomaliesResponse, ForecastResponse, RecommendResponse, BenchmarkRow } from "../src/types.js";
import {
  benchmarkView,
  chartLayout,
  parseRadiusInput,
  recommendationRows,
} from "../src/viewmodel.js";
import alpha0 from "./fixtures/recommend_alpha0.json";
import alpha03 from "./fixtures/recommend_alpha03.json";
import anomaliesFixture from "./fixtures/anomalies.json";
import benchmarkFixture from "./fixtures/benchmark.json";
import forecastFixture from "./fixtures/forecast.json";

const alpha0Response = alpha0 as unknown as RecommendResponse;
const alpha03Response = alpha03 as unknown as RecommendResponse;

describe("ranking fidelity against recorded responses", () => {
  it("preserves the response order exactly and never re-sorts", () => {
    for (const fixture of [alpha0Response, alpha03Response]) {
      const rows = recommendationRows(fixture);
      expect(rows.map((r) => r.poiId)).toEqual(fixture.results.map((r) => r.poi.id));
      expect(rows.map((r) => r.rank)).toEqual(fixture.results.map((_, i) => i + 1));
    }
  });

  it("every displayed number comes verbatim from an API field", () => {
    const rows = recommendationRows(alpha03Response);
    for (const [i, row] of rows.entries()) {
      const src = alpha03Response.results[i];
      // raw carriers are the exact response values
      expect(row.s).toBe(src.s);
      expect(row.sMf).toBe(src.s_mf);
      expect(row.sAqi).toBe(src.s_aqi);
      expect(row.aqi).toBe(src.aqi_at_poi);
      expect(row.distanceM).toBe(src.distance_m);
      expect(row.predictedRating).toBe(src.predicted_rating);
      // displayed strings are fixed-point renderings of those same values
      expect(row.display.s).toBe(src.s.toFixed(3));
      expect(row.display.sMf).toBe(src.s_mf.toFixed(3));
      expect(row.display.sAqi).toBe(src.s_aqi.toFixed(3));
      expect(row.display.aqi).toBe(src.aqi_at_poi.toFixed(1));
      expect(row.display.distance).toBe(`${Math.round(src.distance_m)} m`);
      expect(row.name).toBe(src.poi.name);
      expect(row.category).toBe(src.poi.category);
    }
  });

  it("the alpha=0 fixture renders an AQI-ascending list", () => {
    expect(alpha0Response.alpha).toBe(0);
    const rows = recommendationRows(alpha0Response);
    const aqis = rows.map((r) => r.aqi);
    expect([...aqis].sort((a, b) => a - b)).toEqual(aqis);
  });
});

describe("benchmark view", () => {
  it("groups the recorded summary by scenario and user", () => {
    const rows = benchmarkFixture as BenchmarkRow[];
    const view = benchmarkView(rows);
    expect(view.scenarios).toEqual(["centralized", "distributed", "federated"]);
    expect(view.users.length).toBe(3);
    for (const row of rows) {
      const cell = view.cells.get(`${row.scenario}|${row.user_id}`);
      expect(cell).toBeDefined();
      expect(cell!.medianAe).toBe(row.median_ae);
      expect(cell!.n).toBe(row.n);
    }
  });

  it("marks the lowest-median scenario per user", () => {
    const rows = benchmarkFixture as BenchmarkRow[];
    const view = benchmarkView(rows);
    for (const user of view.users) {
      const winner = view.bestScenarioPerUser.get(user)!;
      const winning = view.cells.get(`${winner}|${user}`)!.medianAe;
      for (const scenario of view.scenarios) {
        expect(winning).toBeLessThanOrEqual(view.cells.get(`${scenario}|${user}`)!.medianAe);
      }
    }
  });
});

describe("chart layout", () => {
  it("scales all anomaly markers inside the box", () => {
    const layout = chartLayout(
      forecastFixture as unknown as ForecastResponse,
      anomaliesFixture as unknown as AnomaliesResponse,
      640,
      220,
    );
    expect(layout.anomalyPoints.length).toBeGreaterThan(0);
    for (const point of layout.anomalyPoints) {
      expect(point.x).toBeGreaterThanOrEqual(0);
      expect(point.x).toBeLessThanOrEqual(640);
      expect(point.y).toBeGreaterThanOrEqual(0);
      expect(point.y).toBeLessThanOrEqual(220);
    }
    expect(layout.observedPath.startsWith("M")).toBe(true);
    expect(layout.predictedPath.split("L").length).toBe(
      (forecastFixture as unknown as ForecastResponse).predicted.timestamps.length,
    );
  });
});

describe("radius validation", () => {
  it("accepts positive numbers", () => {
    expect(parseRadiusInput("850")).toEqual({ ok: true, value: 850 });
    expect(parseRadiusInput(" 1200.5 ")).toEqual({ ok: true, value: 1200.5 });
  });

  it("rejects junk without a value", () => {
    for (const raw of ["", "abc", "-5", "0", "NaN"]) {
      const out = parseRadiusInput(raw);
      expect(out.ok).toBe(false);
    }
  });
});
