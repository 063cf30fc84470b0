/** Application bootstrap: binds controls, loads map data, keeps the URL in
 * sync with the state so a configured view is shareable. */

import { ApiClient, ApiError } from "./api.js";
import { renderChart } from "./charts.js";
import { RecommendController, RecommendView } from "./controller.js";
import { MapView } from "./map.js";
import { PERSONAS } from "./personas.js";
import { banner, renderBenchmark, renderLegend, renderRecommendationTable } from "./render.js";
import { AppState, stateFromQuery, stateToQuery } from "./state.js";
import type { GridResponse, RecommendResponse, ScoredPoi, Sensor } from "./types.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function apiBase(): string {
  const q = new URLSearchParams(window.location.search);
  return q.get("api") ?? "http://127.0.0.1:8000";
}

function gridBbox(sensors: Sensor[], state: AppState) {
  const lats = sensors.map((s) => s.latitude).concat([state.lat]);
  const lons = sensors.map((s) => s.longitude).concat([state.lon]);
  const padLat = 0.004;
  const padLon = 0.005;
  return {
    min_lat: Math.min(...lats) - padLat,
    min_lon: Math.min(...lons) - padLon,
    max_lat: Math.max(...lats) + padLat,
    max_lon: Math.max(...lons) + padLon,
  };
}

async function boot(): Promise<void> {
  const api = new ApiClient(apiBase());
  const state = stateFromQuery(window.location.search);

  const errorBanner = byId<HTMLDivElement>("error-banner");
  const staleBadge = byId<HTMLSpanElement>("stale-badge");
  const alphaSlider = byId<HTMLInputElement>("alpha-slider");
  const alphaValue = byId<HTMLSpanElement>("alpha-value");
  const personaSelect = byId<HTMLSelectElement>("persona-select");
  const radiusInput = byId<HTMLInputElement>("radius-input");
  const radiusError = byId<HTMLSpanElement>("radius-error");
  const userInput = byId<HTMLInputElement>("user-input");
  const listBody = byId<HTMLTableSectionElement>("rec-body");
  const sensorSelect = byId<HTMLSelectElement>("sensor-select");
  const pollutantSelect = byId<HTMLSelectElement>("pollutant-select");
  const chartHost = byId<SVGSVGElement & HTMLElement>("sensor-chart");

  renderLegend(byId("legend"));
  personaSelect.replaceChildren(new Option("custom", ""));
  for (const persona of PERSONAS) {
    personaSelect.appendChild(new Option(`${persona.name} (α=${persona.alpha})`, persona.name));
  }

  let sensors: Sensor[] = [];
  let grid: GridResponse | null = null;
  let currentPois: ScoredPoi[] = [];

  const map = new MapView(byId<HTMLCanvasElement>("map-canvas"), (lat, lon) => {
    void controller.onLocationPick(lat, lon);
  });

  const redrawMap = () => {
    map.render({
      grid,
      sensors,
      pois: currentPois,
      queryLat: state.lat,
      queryLon: state.lon,
      radiusM: state.radiusM,
    });
  };

  const pushUrl = (s: AppState) => {
    const q = new URLSearchParams(window.location.search);
    const keep = q.get("api");
    const next = new URLSearchParams(stateToQuery(s));
    if (keep !== null) next.set("api", keep);
    window.history.replaceState(null, "", `?${next}`);
  };

  const view: RecommendView = {
    renderRecommendations(rows, response: RecommendResponse) {
      renderRecommendationTable(listBody, rows, (poiId, value) => {
        api.rate(state.userId, poiId, value)
          .then((receipt) => banner(errorBanner, null) ?? console.info("rated", receipt))
          .catch((err) => banner(errorBanner, err instanceof ApiError ? err.message : String(err)));
      });
      currentPois = response.results;
      redrawMap();
    },
    showError(message) {
      banner(errorBanner, message);
    },
    clearError() {
      banner(errorBanner, null);
    },
    markStale(stale) {
      staleBadge.classList.toggle("visible", stale);
    },
    showRadiusError(message) {
      radiusError.textContent = message ?? "";
    },
    syncControls(s) {
      alphaSlider.value = String(s.alpha);
      alphaValue.textContent = s.alpha.toFixed(2);
      personaSelect.value = s.persona ?? "";
      radiusInput.value = String(s.radiusM);
      userInput.value = s.userId;
    },
  };

  const controller = new RecommendController(api, state, view, pushUrl);
  view.syncControls(state);

  alphaSlider.addEventListener("input", () => {
    void controller.onAlphaInput(Number(alphaSlider.value));
  });
  personaSelect.addEventListener("change", () => {
    if (personaSelect.value !== "") {
      void controller.onPersonaSelect(personaSelect.value);
    }
  });
  radiusInput.addEventListener("change", () => {
    void controller.onRadiusInput(radiusInput.value);
  });
  userInput.addEventListener("change", () => {
    void controller.onUserInput(userInput.value);
  });

  byId<HTMLButtonElement>("fl-round-btn").addEventListener("click", () => {
    api.flRound()
      .then((report) => {
        banner(errorBanner, null);
        byId("fl-status").textContent =
          `round ${report.round}: ${report.participating_clients.length} clients, ` +
          `delta ${report.aggregate_delta_norm.toFixed(4)}`;
        return controller.refresh();
      })
      .catch((err) => banner(errorBanner, err instanceof ApiError ? err.message : String(err)));
  });

  const refreshSensorPanel = async () => {
    state.sensorId = sensorSelect.value || state.sensorId;
    state.pollutant = pollutantSelect.value || state.pollutant;
    pushUrl(state);
    try {
      const forecast = await api.forecast(state.sensorId, state.pollutant, 6);
      const anomalies = await api.anomalies(state.sensorId, state.pollutant);
      if (!forecast.stale && !anomalies.stale) {
        renderChart(chartHost as unknown as SVGSVGElement, forecast.body, anomalies.body);
      }
    } catch (err) {
      banner(errorBanner, err instanceof ApiError ? err.message : String(err));
    }
  };
  sensorSelect.addEventListener("change", () => void refreshSensorPanel());
  pollutantSelect.addEventListener("change", () => void refreshSensorPanel());

  // initial data load
  try {
    sensors = await api.sensors();
    sensorSelect.replaceChildren(...sensors.map((s) => new Option(s.id, s.id)));
    sensorSelect.value = state.sensorId;
    pollutantSelect.value = state.pollutant;
    grid = await api.grid(gridBbox(sensors, state), 48, 64);
    redrawMap();
  } catch (err) {
    banner(errorBanner, err instanceof ApiError ? err.message : String(err));
    staleBadge.classList.add("visible");
  }

  await controller.refresh();
  await refreshSensorPanel();

  try {
    renderBenchmark(byId("benchmark-panel"), await api.benchmarkSummary());
  } catch (err) {
    byId("benchmark-panel").textContent =
      err instanceof ApiError && err.status === 404
        ? "no benchmark results yet: run the fl-bench command against this data root"
        : String(err);
  }
}

void boot();
