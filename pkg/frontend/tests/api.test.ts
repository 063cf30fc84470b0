import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import alpha0 from "./fixtures/recommend_alpha0.json";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("last-write-wins request gating", () => {
  it("marks an out-of-order response stale", async () => {
    const resolvers: Array<(r: Response) => void> = [];
    const api = new ApiClient("http://test", (_url) =>
      new Promise<Response>((resolve) => resolvers.push(resolve)),
    );
    const first = api.recommend({ user_id: "u", lat: 0, lon: 0 });
    const second = api.recommend({ user_id: "u", lat: 0, lon: 0 });
    // the slow first request resolves after the second was issued
    resolvers[1](jsonResponse({ ...alpha0, alpha: 0.9 }));
    resolvers[0](jsonResponse(alpha0));
    const firstOut = await first;
    const secondOut = await second;
    expect(firstOut.stale).toBe(true);
    expect(secondOut.stale).toBe(false);
    if (!secondOut.stale) {
      expect(secondOut.body.alpha).toBe(0.9);
    }
  });

  it("gates per family, not globally", async () => {
    const api = new ApiClient("http://test", async (url) => {
      if (url.includes("/api/forecast")) {
        return jsonResponse({ sensor_id: "s", pollutant: "no", observed: { timestamps: [], values: [] }, predicted: { timestamps: [], values: [] }, residual_sigma: 0 });
      }
      return jsonResponse(alpha0);
    });
    const rec = api.recommend({ user_id: "u", lat: 0, lon: 0 });
    const fc = api.forecast("s", "no", 6);
    expect((await rec).stale).toBe(false);
    expect((await fc).stale).toBe(false);
  });
});

describe("error mapping", () => {
  it("surfaces the API's detail message", async () => {
    const api = new ApiClient("http://test", async () =>
      jsonResponse({ detail: "alpha out of range [0, 1]: 1.5" }, 400),
    );
    await expect(api.sensors()).rejects.toThrowError(/alpha out of range/);
  });

  it("wraps network failures as status 0", async () => {
    const api = new ApiClient("http://test", async () => {
      throw new TypeError("fetch failed");
    });
    try {
      await api.sensors();
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(0);
    }
  });
});
