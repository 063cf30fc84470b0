/** Wiring between user intent, app state, and the API client.
 *
 * DOM-free: views are injected callbacks, so the logic is testable with a
 * recording fetch stub. Every input path re-queries at most once.
 */

import { ApiClient, ApiError } from "./api.js";
import { personaByName } from "./personas.js";
import type { AppState } from "./state.js";
import type { RecommendResponse } from "./types.js";
import { parseRadiusInput, recommendationRows, RecommendationRow } from "./viewmodel.js";

export interface RecommendView {
  renderRecommendations(rows: RecommendationRow[], response: RecommendResponse): void;
  showError(message: string): void;
  clearError(): void;
  markStale(stale: boolean): void;
  showRadiusError(message: string | null): void;
  syncControls(state: AppState): void;
}

export class RecommendController {
  constructor(
    private readonly api: ApiClient,
    readonly state: AppState,
    private readonly view: RecommendView,
    private readonly onStateChange: (state: AppState) => void = () => {},
  ) {}

  /** Issue one recommend query for the current state. */
  async refresh(): Promise<void> {
    const gated = await this.api
      .recommend({
        user_id: this.state.userId,
        lat: this.state.lat,
        lon: this.state.lon,
        radius_m: this.state.radiusM,
        alpha: this.state.alpha,
        limit: this.state.limit,
      })
      .catch((err: unknown) => {
        const msg = err instanceof ApiError ? err.message : String(err);
        this.view.showError(msg);
        this.view.markStale(true);
        return null;
      });
    if (gated === null || gated.stale) {
      return; // superseded or failed; never overwrite fresher data
    }
    this.view.clearError();
    this.view.markStale(false);
    this.view.renderRecommendations(recommendationRows(gated.body), gated.body);
    this.onStateChange(this.state);
  }

  onAlphaInput(alpha: number): Promise<void> {
    this.state.alpha = Math.min(1, Math.max(0, alpha));
    this.state.persona = null;
    this.view.syncControls(this.state);
    return this.refresh();
  }

  /** Selecting a persona snaps alpha to its preset and re-queries once. */
  onPersonaSelect(name: string): Promise<void> {
    const preset = personaByName(name);
    if (preset === undefined) {
      this.view.showError(`unknown persona: ${name}`);
      return Promise.resolve();
    }
    this.state.persona = preset.name;
    this.state.alpha = preset.alpha;
    this.view.syncControls(this.state);
    return this.refresh();
  }

  /** Radius edits validate inline; invalid input sends no request. */
  onRadiusInput(raw: string): Promise<void> {
    const parsed = parseRadiusInput(raw);
    if (!parsed.ok) {
      this.view.showRadiusError(parsed.message);
      return Promise.resolve();
    }
    this.view.showRadiusError(null);
    this.state.radiusM = parsed.value;
    return this.refresh();
  }

  onUserInput(userId: string): Promise<void> {
    this.state.userId = userId;
    return this.refresh();
  }

  onLocationPick(lat: number, lon: number): Promise<void> {
    this.state.lat = lat;
    this.state.lon = lon;
    return this.refresh();
  }
}
