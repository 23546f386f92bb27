/**
 * Keypoint-picking state machine.
 *
 * Pure logic, no HTTP and no DOM: clicks produce intents that the session
 * controller executes against the server, and the confirmed pair list is a
 * mirror of GET /api/pairs refreshed after every mutation round-trip. A
 * pair is only ever submitted when both a source and a target pick exist.
 */

import type { CloudName, PairRecord } from "./api";

export type Vec3 = [number, number, number];

export interface PendingPick {
  cloud: CloudName;
  point: Vec3;
  index: number;
}

export type ClickIntent =
  | { type: "pending-set"; pick: PendingPick }
  | { type: "submit-pair"; source: Vec3; target: Vec3 }
  | { type: "hint"; message: string };

export const MIN_PAIRS_FOR_ESTIMATE = 3;

export class PickState {
  pending: PendingPick | null = null;
  pairs: PairRecord[] = [];
  selectedPairId: number | null = null;

  /** Interpret a snapped click on one of the clouds. */
  click(cloud: CloudName, point: Vec3, index: number): ClickIntent {
    if (cloud === "source") {
      this.pending = { cloud, point, index };
      return { type: "pending-set", pick: this.pending };
    }
    if (!this.pending) {
      return {
        type: "hint",
        message: "pick a point in the source cloud first",
      };
    }
    const source = this.pending.point;
    this.pending = null;
    return { type: "submit-pair", source, target: point };
  }

  clearPending(): void {
    this.pending = null;
  }

  /** Replace the mirror with the server's pair list. */
  sync(pairs: PairRecord[]): void {
    this.pairs = pairs;
    if (
      this.selectedPairId !== null &&
      !pairs.some((p) => p.id === this.selectedPairId)
    ) {
      this.selectedPairId = null;
    }
  }

  select(id: number | null): void {
    this.selectedPairId =
      id !== null && this.pairs.some((p) => p.id === id) ? id : null;
  }

  get canEstimate(): boolean {
    return this.pairs.length >= MIN_PAIRS_FOR_ESTIMATE;
  }
}

/** Index of the worst pair in a residual table (null when empty). */
export function worstPair(
  pairIds: number[],
  residuals: number[],
): number | null {
  if (pairIds.length === 0) return null;
  let worst = 0;
  for (let i = 1; i < residuals.length; i++) {
    if (residuals[i] > residuals[worst]) worst = i;
  }
  return pairIds[worst];
}

/** Green-to-red color ramp for residual badges. */
export function residualColor(value: number, max: number): string {
  const t = max > 0 ? Math.min(1, value / max) : 0;
  const hue = Math.round(120 * (1 - t));
  return `hsl(${hue}, 75%, 45%)`;
}
