/** SVG assembly for the sensor detail chart (observed, predicted, anomalies). */

import type { AnomaliesResponse, ForecastResponse } from "./types.js";
import { chartLayout } from "./viewmodel.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el(name: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

export function renderChart(
  host: SVGSVGElement,
  forecast: ForecastResponse,
  anomalies: AnomaliesResponse,
): void {
  const width = host.viewBox.baseVal.width || 640;
  const height = host.viewBox.baseVal.height || 220;
  const layout = chartLayout(forecast, anomalies, width, height);
  host.replaceChildren();

  host.appendChild(el("path", {
    d: layout.observedPath,
    fill: "none",
    stroke: "#374151",
    "stroke-width": "1",
  }));
  host.appendChild(el("path", {
    d: layout.predictedPath,
    fill: "none",
    stroke: "#2563eb",
    "stroke-width": "1.5",
    "stroke-dasharray": "5,3",
  }));
  for (const point of layout.anomalyPoints) {
    host.appendChild(el("circle", {
      cx: String(point.x),
      cy: String(point.y),
      r: "4",
      fill: "#dc2626",
      stroke: "#ffffff",
      "stroke-width": "1",
    }));
  }
  const label = el("text", { x: "6", y: "14", fill: "#6b7280", "font-size": "11" });
  label.textContent =
    `${forecast.sensor_id} ${forecast.pollutant} | range ${layout.vMin.toFixed(1)}..${layout.vMax.toFixed(1)}` +
    ` | ${anomalies.anomalies.length} anomalies at k=${anomalies.k_sigma}`;
  host.appendChild(label);
}
