/**
 * Fixed six-band AQI palette. Heatmap cells and station markers derive their
 * color from this table and nothing else, so rendering is a pure function of
 * the AQI value.
 *
 *   0- 50  #00e400  good
 *  50-100  #ffff00  moderate
 * 100-150  #ff7e00  unhealthy for sensitive groups
 * 150-200  #ff0000  unhealthy
 * 200-300  #8f3f97  very unhealthy
 * 300+     #7e0023  hazardous
 */

export interface AqiBand {
  upper: number;
  color: string;
  label: string;
}

export const AQI_BANDS: readonly AqiBand[] = [
  { upper: 50, color: "#00e400", label: "good" },
  { upper: 100, color: "#ffff00", label: "moderate" },
  { upper: 150, color: "#ff7e00", label: "unhealthy for sensitive groups" },
  { upper: 200, color: "#ff0000", label: "unhealthy" },
  { upper: 300, color: "#8f3f97", label: "very unhealthy" },
  { upper: Infinity, color: "#7e0023", label: "hazardous" },
];

export function colorForAqi(value: number): string {
  for (const band of AQI_BANDS) {
    if (value <= band.upper) {
      return band.color;
    }
  }
  return AQI_BANDS[AQI_BANDS.length - 1].color;
}

export function labelForAqi(value: number): string {
  for (const band of AQI_BANDS) {
    if (value <= band.upper) {
      return band.label;
    }
  }
  return AQI_BANDS[AQI_BANDS.length - 1].label;
}
