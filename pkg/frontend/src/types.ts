/** Shapes of the airsense API responses consumed by the UI. */

export interface AqiInfo {
  overall: number;
  dominant: string;
  sub_indices: Record<string, number>;
  saturated: string[];
}

export interface Sensor {
  id: string;
  latitude: number;
  longitude: number;
  label: string;
  city: string;
  latest_timestamp: number | null;
  aqi: AqiInfo | null;
}

export interface GridResponse {
  grid: {
    min_lat: number;
    min_lon: number;
    max_lat: number;
    max_lon: number;
    rows: number;
    cols: number;
  };
  values: number[];
}

export interface ScoredPoi {
  poi: {
    id: string;
    name: string;
    category: string;
    latitude: number;
    longitude: number;
  };
  s_mf: number;
  s_aqi: number;
  s: number;
  predicted_rating: number;
  aqi_at_poi: number;
  distance_m: number;
}

export interface RecommendResponse {
  model_version: number;
  user_id: string;
  alpha: number;
  radius_m: number;
  limit: number;
  results: ScoredPoi[];
}

export interface RecommendRequest {
  user_id: string;
  lat: number;
  lon: number;
  radius_m?: number;
  alpha?: number;
  limit?: number;
}

export interface RatingReceipt {
  status: string;
  user_id: string;
  poi_id: string;
  value: number;
  total_ratings: number;
}

export interface SeriesPayload {
  timestamps: number[];
  values: number[];
}

export interface ForecastResponse {
  sensor_id: string;
  pollutant: string;
  observed: SeriesPayload;
  predicted: SeriesPayload;
  residual_sigma: number;
}

export interface AnomalyPoint {
  timestamp: number;
  observed: number;
  expected: number;
  z_score: number;
}

export interface AnomaliesResponse {
  sensor_id: string;
  pollutant: string;
  k_sigma: number;
  anomalies: AnomalyPoint[];
}

export interface BenchmarkRow {
  scenario: string;
  user_id: string;
  median_ae: number;
  mean_ae: number;
  n: number;
}

export interface RoundReport {
  round: number;
  participating_clients: string[];
  per_client_holdout_mae: Record<string, number>;
  aggregate_delta_norm: number;
  model_version: number;
}
