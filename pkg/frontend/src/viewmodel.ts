/** Pure view-model builders.
 *
 * The UI performs no scoring: every number shown on screen is taken verbatim
 * from an API field and only formatted here. Row order always equals the
 * response order.
 */

import type {
  AnomaliesResponse,
  BenchmarkRow,
  ForecastResponse,
  RecommendResponse,
} from "./types.js";

export interface RecommendationRow {
  rank: number;
  poiId: string;
  name: string;
  category: string;
  s: number;
  sMf: number;
  sAqi: number;
  aqi: number;
  distanceM: number;
  predictedRating: number;
  display: {
    s: string;
    sMf: string;
    sAqi: string;
    aqi: string;
    distance: string;
    rating: string;
  };
}

export function formatScore(value: number): string {
  return value.toFixed(3);
}

export function formatAqi(value: number): string {
  return value.toFixed(1);
}

export function formatDistance(meters: number): string {
  return `${Math.round(meters)} m`;
}

export function formatRating(value: number): string {
  return value.toFixed(2);
}

export function recommendationRows(response: RecommendResponse): RecommendationRow[] {
  return response.results.map((entry, index) => ({
    rank: index + 1,
    poiId: entry.poi.id,
    name: entry.poi.name,
    category: entry.poi.category,
    s: entry.s,
    sMf: entry.s_mf,
    sAqi: entry.s_aqi,
    aqi: entry.aqi_at_poi,
    distanceM: entry.distance_m,
    predictedRating: entry.predicted_rating,
    display: {
      s: formatScore(entry.s),
      sMf: formatScore(entry.s_mf),
      sAqi: formatScore(entry.s_aqi),
      aqi: formatAqi(entry.aqi_at_poi),
      distance: formatDistance(entry.distance_m),
      rating: formatRating(entry.predicted_rating),
    },
  }));
}

export interface BenchmarkCell {
  medianAe: number;
  meanAe: number;
  n: number;
}

export interface BenchmarkView {
  scenarios: string[];
  users: string[];
  cells: Map<string, BenchmarkCell>; // key `${scenario}|${user}`
  bestScenarioPerUser: Map<string, string>;
}

export function benchmarkView(rows: BenchmarkRow[]): BenchmarkView {
  const scenarios = [...new Set(rows.map((r) => r.scenario))].sort();
  const users = [...new Set(rows.map((r) => r.user_id))].sort();
  const cells = new Map<string, BenchmarkCell>();
  for (const row of rows) {
    cells.set(`${row.scenario}|${row.user_id}`, {
      medianAe: row.median_ae,
      meanAe: row.mean_ae,
      n: row.n,
    });
  }
  const best = new Map<string, string>();
  for (const user of users) {
    let winner = "";
    let lowest = Infinity;
    for (const scenario of scenarios) {
      const cell = cells.get(`${scenario}|${user}`);
      if (cell && cell.medianAe < lowest) {
        lowest = cell.medianAe;
        winner = scenario;
      }
    }
    best.set(user, winner);
  }
  return { scenarios, users, cells, bestScenarioPerUser: best };
}

export interface ChartPoint {
  x: number;
  y: number;
}

export interface ChartLayout {
  observedPath: string;
  predictedPath: string;
  anomalyPoints: ChartPoint[];
  tMin: number;
  tMax: number;
  vMin: number;
  vMax: number;
}

function pathFrom(ts: number[], vs: number[], sx: (t: number) => number, sy: (v: number) => number): string {
  return ts
    .map((t, i) => `${i === 0 ? "M" : "L"}${sx(t).toFixed(1)},${sy(vs[i]).toFixed(1)}`)
    .join("");
}

/** Scale the observed/predicted series and anomaly markers into a width x
 * height box (y axis flipped for SVG). */
export function chartLayout(
  forecast: ForecastResponse,
  anomalies: AnomaliesResponse,
  width: number,
  height: number,
): ChartLayout {
  const ts = [...forecast.observed.timestamps, ...forecast.predicted.timestamps];
  const vs = [...forecast.observed.values, ...forecast.predicted.values];
  const tMin = Math.min(...ts);
  const tMax = Math.max(...ts);
  const vMin = Math.min(...vs);
  const vMax = Math.max(...vs);
  const tSpan = tMax - tMin || 1;
  const vSpan = vMax - vMin || 1;
  const sx = (t: number) => ((t - tMin) / tSpan) * width;
  const sy = (v: number) => height - ((v - vMin) / vSpan) * height;
  return {
    observedPath: pathFrom(forecast.observed.timestamps, forecast.observed.values, sx, sy),
    predictedPath: pathFrom(forecast.predicted.timestamps, forecast.predicted.values, sx, sy),
    anomalyPoints: anomalies.anomalies
      .filter((a) => a.timestamp >= tMin && a.timestamp <= tMax)
      .map((a) => ({ x: sx(a.timestamp), y: sy(a.observed) })),
    tMin,
    tMax,
    vMin,
    vMax,
  };
}

/** Radius field validation: meters as a positive finite number. */
export function parseRadiusInput(raw: string): { ok: true; value: number } | { ok: false; message: string } {
  const value = Number(raw.trim());
  if (!Number.isFinite(value) || raw.trim() === "") {
    return { ok: false, message: "radius must be a number of meters" };
  }
  if (value <= 0) {
    return { ok: false, message: "radius must be positive" };
  }
  return { ok: true, value };
}
