/** Typed client over the airsense HTTP API.
 *
 * Responses can resolve out of order when the user drags the alpha slider;
 * every endpoint family carries a request sequence number and a response is
 * delivered only if no newer request of that family has started since
 * (last-write-wins).
 */

import type {
  AnomaliesResponse,
  BenchmarkRow,
  ForecastResponse,
  GridResponse,
  RatingReceipt,
  RecommendRequest,
  RecommendResponse,
  RoundReport,
  Sensor,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Either the parsed body, or stale=true when a newer request superseded it. */
export type Gated<T> = { stale: true } | { stale: false; body: T };

export class ApiClient {
  private seq: Record<string, number> = {};

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ApiError(0, `API unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  /** Run a request under a named last-write-wins gate. */
  private async gated<T>(family: string, run: () => Promise<T>): Promise<Gated<T>> {
    const ticket = (this.seq[family] ?? 0) + 1;
    this.seq[family] = ticket;
    const body = await run();
    if (this.seq[family] !== ticket) {
      return { stale: true };
    }
    return { stale: false, body };
  }

  sensors(): Promise<Sensor[]> {
    return this.request("/api/sensors");
  }

  grid(bbox: { min_lat: number; min_lon: number; max_lat: number; max_lon: number },
       rows: number, cols: number): Promise<GridResponse> {
    const q = new URLSearchParams({
      min_lat: String(bbox.min_lat),
      min_lon: String(bbox.min_lon),
      max_lat: String(bbox.max_lat),
      max_lon: String(bbox.max_lon),
      rows: String(rows),
      cols: String(cols),
    });
    return this.request(`/api/aqi/grid?${q}`);
  }

  recommend(body: RecommendRequest): Promise<Gated<RecommendResponse>> {
    return this.gated("recommend", () =>
      this.request<RecommendResponse>("/api/recommend", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  rate(userId: string, poiId: string, value: number): Promise<RatingReceipt> {
    return this.request("/api/ratings", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ user_id: userId, poi_id: poiId, value }),
    });
  }

  flRound(): Promise<RoundReport> {
    return this.request("/api/fl/round", { method: "POST" });
  }

  forecast(sensorId: string, pollutant: string, horizonHours: number): Promise<Gated<ForecastResponse>> {
    const q = new URLSearchParams({
      sensor_id: sensorId,
      pollutant,
      horizon_hours: String(horizonHours),
    });
    return this.gated("forecast", () => this.request<ForecastResponse>(`/api/forecast?${q}`));
  }

  anomalies(sensorId: string, pollutant: string): Promise<Gated<AnomaliesResponse>> {
    const q = new URLSearchParams({ sensor_id: sensorId, pollutant });
    return this.gated("anomalies", () => this.request<AnomaliesResponse>(`/api/anomalies?${q}`));
  }

  benchmarkSummary(): Promise<BenchmarkRow[]> {
    return this.request("/api/benchmark/summary");
  }
}
