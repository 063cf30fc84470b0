import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { RecommendController, RecommendView } from "../src/controller.js";
import { PERSONAS, personaByName } from "../src/personas.js";
import { DEFAULT_STATE } from "../src/state.js";
import alpha0 from "./fixtures/recommend_alpha0.json";

function jsonResponse(body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status: 200,
    headers: { "Content-Type": "application/json" },
  });
}

interface Logged {
  url: string;
  body: Record<string, unknown>;
}

function harness() {
  const log: Logged[] = [];
  const api = new ApiClient("http://test", async (url, init) => {
    log.push({ url, body: init?.body ? JSON.parse(String(init.body)) : {} });
    return jsonResponse(alpha0);
  });
  const rendered: unknown[] = [];
  const view: RecommendView = {
    renderRecommendations: (rows) => rendered.push(rows),
    showError: () => {},
    clearError: () => {},
    markStale: () => {},
    showRadiusError: () => {},
    syncControls: () => {},
  };
  const controller = new RecommendController(api, { ...DEFAULT_STATE }, view);
  return { controller, log, rendered };
}

describe("persona presets", () => {
  it("includes the four documented presets", () => {
    const wanted: Array<[string, number]> = [
      ["User 1 — healthy, preference-led", 1.0],
      ["User 2 — elderly, AQI-cautious", 0.3],
      ["Balanced", 0.5],
      ["AQI only", 0.0],
    ];
    for (const [name, alpha] of wanted) {
      const preset = personaByName(name);
      expect(preset, name).toBeDefined();
      expect(preset!.alpha).toBe(alpha);
    }
    expect(PERSONAS.length).toBeGreaterThanOrEqual(4);
    for (const preset of PERSONAS) {
      expect(preset.alpha).toBeGreaterThanOrEqual(0);
      expect(preset.alpha).toBeLessThanOrEqual(1);
    }
  });

  it("selecting User 2 sets alpha to 0.3 and issues exactly one request", async () => {
    const { controller, log } = harness();
    await controller.onPersonaSelect("User 2 — elderly, AQI-cautious");
    expect(controller.state.alpha).toBe(0.3);
    expect(controller.state.persona).toBe("User 2 — elderly, AQI-cautious");
    const recommendCalls = log.filter((entry) => entry.url.endsWith("/api/recommend"));
    expect(recommendCalls.length).toBe(1);
    expect(recommendCalls[0].body.alpha).toBe(0.3);
  });

  it("unknown persona issues no request", async () => {
    const { controller, log } = harness();
    await controller.onPersonaSelect("Somebody Else");
    expect(log.length).toBe(0);
  });

  it("alpha slider input clears the persona and re-queries once", async () => {
    const { controller, log } = harness();
    await controller.onPersonaSelect("Balanced");
    await controller.onAlphaInput(0.85);
    expect(controller.state.persona).toBeNull();
    expect(controller.state.alpha).toBe(0.85);
    expect(log.filter((e) => e.url.endsWith("/api/recommend")).length).toBe(2);
  });

  it("invalid radius input never reaches the API", async () => {
    const { controller, log } = harness();
    await controller.onRadiusInput("not-a-number");
    expect(log.length).toBe(0);
    await controller.onRadiusInput("750");
    expect(log.length).toBe(1);
    expect(controller.state.radiusM).toBe(750);
  });
});
