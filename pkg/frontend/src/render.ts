/** DOM rendering for the ranked list, benchmark table, legend, and banner. */

import { AQI_BANDS, colorForAqi } from "./colors.js";
import type { BenchmarkRow } from "./types.js";
import { benchmarkView, RecommendationRow } from "./viewmodel.js";

export function renderRecommendationTable(
  tbody: HTMLTableSectionElement,
  rows: RecommendationRow[],
  onRate: (poiId: string, value: number) => void,
): void {
  tbody.replaceChildren();
  for (const row of rows) {
    const tr = document.createElement("tr");

    const cells = [
      String(row.rank),
      row.name,
      row.category,
      row.display.s,
      row.display.sMf,
      row.display.sAqi,
      row.display.aqi,
      row.display.distance,
    ];
    for (const [index, text] of cells.entries()) {
      const td = document.createElement("td");
      td.textContent = text;
      if (index === 6) {
        td.style.borderLeft = `6px solid ${colorForAqi(row.aqi)}`;
      }
      tr.appendChild(td);
    }

    const rate = document.createElement("td");
    rate.className = "stars";
    for (let value = 1; value <= 5; value += 1) {
      const star = document.createElement("button");
      star.textContent = "★";
      star.title = `rate ${row.name}: ${value}`;
      star.addEventListener("click", () => onRate(row.poiId, value));
      rate.appendChild(star);
    }
    tr.appendChild(rate);
    tbody.appendChild(tr);
  }
}

export function renderBenchmark(host: HTMLElement, rows: BenchmarkRow[]): void {
  const view = benchmarkView(rows);
  host.replaceChildren();
  const table = document.createElement("table");
  const head = table.createTHead().insertRow();
  head.insertCell().textContent = "median AE";
  for (const user of view.users) {
    head.insertCell().textContent = user;
  }
  const body = table.createTBody();
  for (const scenario of view.scenarios) {
    const tr = body.insertRow();
    tr.insertCell().textContent = scenario;
    for (const user of view.users) {
      const cell = view.cells.get(`${scenario}|${user}`);
      const td = tr.insertCell();
      if (cell === undefined) {
        td.textContent = "-";
        continue;
      }
      td.textContent = `${cell.medianAe.toFixed(3)} (n=${cell.n})`;
      if (view.bestScenarioPerUser.get(user) === scenario) {
        td.classList.add("winner");
      }
    }
  }
  host.appendChild(table);
}

export function renderLegend(host: HTMLElement): void {
  host.replaceChildren();
  for (const band of AQI_BANDS) {
    const chip = document.createElement("span");
    chip.className = "legend-chip";
    const swatch = document.createElement("i");
    swatch.style.background = band.color;
    chip.appendChild(swatch);
    const label = band.upper === Infinity ? "300+" : `≤${band.upper}`;
    chip.appendChild(document.createTextNode(`${label} ${band.label}`));
    host.appendChild(chip);
  }
}

export function banner(host: HTMLElement, message: string | null): void {
  host.textContent = message ?? "";
  host.classList.toggle("visible", message !== null);
}
