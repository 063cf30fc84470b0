/** Canvas map: AQI heatmap cells, station and POI markers, radius circle.
 *
 * The projection is a plain equirectangular fit of the grid bounding box to
 * the canvas; at city scale the distortion is negligible.
 */

import { colorForAqi } from "./colors.js";
import type { GridResponse, ScoredPoi, Sensor } from "./types.js";

export interface MapData {
  grid: GridResponse | null;
  sensors: Sensor[];
  pois: ScoredPoi[];
  queryLat: number;
  queryLon: number;
  radiusM: number;
}

const METERS_PER_DEG_LAT = 111_194.9;

export class MapView {
  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly onPick: (lat: number, lon: number) => void,
  ) {
    canvas.addEventListener("click", (event) => {
      if (this.bbox === null) return;
      const rect = canvas.getBoundingClientRect();
      const x = ((event.clientX - rect.left) / rect.width) * canvas.width;
      const y = ((event.clientY - rect.top) / rect.height) * canvas.height;
      this.onPick(this.yToLat(y), this.xToLon(x));
    });
  }

  private bbox: { min_lat: number; min_lon: number; max_lat: number; max_lon: number } | null = null;

  private lonToX(lon: number): number {
    const b = this.bbox!;
    return ((lon - b.min_lon) / (b.max_lon - b.min_lon)) * this.canvas.width;
  }

  private latToY(lat: number): number {
    const b = this.bbox!;
    return this.canvas.height - ((lat - b.min_lat) / (b.max_lat - b.min_lat)) * this.canvas.height;
  }

  private xToLon(x: number): number {
    const b = this.bbox!;
    return b.min_lon + (x / this.canvas.width) * (b.max_lon - b.min_lon);
  }

  private yToLat(y: number): number {
    const b = this.bbox!;
    return b.min_lat + ((this.canvas.height - y) / this.canvas.height) * (b.max_lat - b.min_lat);
  }

  render(data: MapData): void {
    const ctx = this.canvas.getContext("2d");
    if (ctx === null) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (data.grid === null) return;
    this.bbox = data.grid.grid;

    const { rows, cols } = data.grid.grid;
    const cellW = this.canvas.width / cols;
    const cellH = this.canvas.height / rows;
    ctx.globalAlpha = 0.55;
    for (let r = 0; r < rows; r += 1) {
      for (let c = 0; c < cols; c += 1) {
        ctx.fillStyle = colorForAqi(data.grid.values[r * cols + c]);
        // row 0 sits at min_lat, which is the bottom of the canvas
        ctx.fillRect(c * cellW, this.canvas.height - (r + 1) * cellH, cellW + 0.5, cellH + 0.5);
      }
    }
    ctx.globalAlpha = 1.0;

    // query radius
    const latSpanM = (this.bbox.max_lat - this.bbox.min_lat) * METERS_PER_DEG_LAT;
    const pxPerMeter = this.canvas.height / latSpanM;
    ctx.beginPath();
    ctx.arc(this.lonToX(data.queryLon), this.latToY(data.queryLat),
            data.radiusM * pxPerMeter, 0, 2 * Math.PI);
    ctx.strokeStyle = "#1d4ed8";
    ctx.lineWidth = 1.5;
    ctx.setLineDash([6, 4]);
    ctx.stroke();
    ctx.setLineDash([]);

    // POI markers from the current recommendation response only
    for (const sp of data.pois) {
      ctx.beginPath();
      ctx.arc(this.lonToX(sp.poi.longitude), this.latToY(sp.poi.latitude), 4, 0, 2 * Math.PI);
      ctx.fillStyle = "#1d4ed8";
      ctx.fill();
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 1;
      ctx.stroke();
    }

    // stations colored by their own AQI
    for (const sensor of data.sensors) {
      const x = this.lonToX(sensor.longitude);
      const y = this.latToY(sensor.latitude);
      ctx.beginPath();
      ctx.arc(x, y, 7, 0, 2 * Math.PI);
      ctx.fillStyle = sensor.aqi === null ? "#9ca3af" : colorForAqi(sensor.aqi.overall);
      ctx.fill();
      ctx.strokeStyle = "#111827";
      ctx.lineWidth = 1.5;
      ctx.stroke();
      ctx.fillStyle = "#111827";
      ctx.font = "10px sans-serif";
      ctx.fillText(sensor.id, x + 9, y + 3);
    }

    // query point
    ctx.beginPath();
    ctx.arc(this.lonToX(data.queryLon), this.latToY(data.queryLat), 5, 0, 2 * Math.PI);
    ctx.fillStyle = "#1d4ed8";
    ctx.fill();
  }
}
