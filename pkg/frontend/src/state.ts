/** Application state, kept round-trippable through the URL query string so a
 * demo configuration is shareable as a link. */

export interface AppState {
  userId: string;
  lat: number;
  lon: number;
  radiusM: number;
  alpha: number;
  persona: string | null;
  limit: number;
  sensorId: string;
  pollutant: string;
}

export const DEFAULT_STATE: AppState = {
  userId: "u00000",
  lat: 41.1258,
  lon: 16.8674,
  radiusM: 1000,
  alpha: 0.5,
  persona: null,
  limit: 10,
  sensorId: "VS04",
  pollutant: "no",
};

export function stateToQuery(state: AppState): string {
  const q = new URLSearchParams();
  q.set("user", state.userId);
  q.set("lat", String(state.lat));
  q.set("lon", String(state.lon));
  q.set("radius", String(state.radiusM));
  q.set("alpha", String(state.alpha));
  if (state.persona !== null) {
    q.set("persona", state.persona);
  }
  q.set("limit", String(state.limit));
  q.set("sensor", state.sensorId);
  q.set("pollutant", state.pollutant);
  return q.toString();
}

function num(q: URLSearchParams, key: string, fallback: number): number {
  const raw = q.get(key);
  if (raw === null) return fallback;
  const value = Number(raw);
  return Number.isFinite(value) ? value : fallback;
}

export function stateFromQuery(query: string): AppState {
  const q = new URLSearchParams(query);
  return {
    userId: q.get("user") ?? DEFAULT_STATE.userId,
    lat: num(q, "lat", DEFAULT_STATE.lat),
    lon: num(q, "lon", DEFAULT_STATE.lon),
    radiusM: num(q, "radius", DEFAULT_STATE.radiusM),
    alpha: Math.min(1, Math.max(0, num(q, "alpha", DEFAULT_STATE.alpha))),
    persona: q.get("persona"),
    limit: Math.max(1, Math.round(num(q, "limit", DEFAULT_STATE.limit))),
    sensorId: q.get("sensor") ?? DEFAULT_STATE.sensorId,
    pollutant: q.get("pollutant") ?? DEFAULT_STATE.pollutant,
  };
}
