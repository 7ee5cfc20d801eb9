import type { CalibrationPayload, CalibrationRowPayload } from "./types.js";

// Calibration display. Kappa arrives as a number from the service and is
// only formatted here; the client never recomputes agreement statistics.

export interface CalibrationRowView {
  source: string;
  display: string;
  kappa: string;
  note: string;
}

export interface ProgressRow {
  source: string;
  finished: number;
  expected: number;
}

export type CalibrationView =
  | { kind: "empty" }
  | { kind: "progress"; rows: ProgressRow[] }
  | { kind: "table"; rows: CalibrationRowView[]; combined: CalibrationRowView };

export function formatKappa(value: number): string {
  return value.toFixed(3);
}

function toView(row: CalibrationRowPayload): CalibrationRowView {
  return {
    source: row.source,
    display: row.agreement_display,
    kappa: formatKappa(row.kappa),
    note: row.degenerate ? "degenerate marginals" : "",
  };
}

/**
 * Decide between the results table and a progress view. A source counts as
 * finished once both annotators covered the expected set size.
 */
export function calibrationView(
  payload: CalibrationPayload,
  expectedN = 50,
): CalibrationView {
  if (!payload.combined || payload.rows.length === 0) return { kind: "empty" };
  const unfinished = payload.rows.filter((r) => r.n < expectedN);
  if (unfinished.length > 0) {
    return {
      kind: "progress",
      rows: payload.rows.map((r) => ({
        source: r.source,
        finished: Math.min(r.n, expectedN),
        expected: expectedN,
      })),
    };
  }
  return {
    kind: "table",
    rows: payload.rows.map(toView),
    combined: toView(payload.combined),
  };
}

/** Positions where two finished label sets disagree, for highlighting. */
export function disagreementIndexes(a: string[], b: string[]): number[] {
  if (a.length !== b.length) {
    throw new Error(`label sets differ in length: ${a.length} vs ${b.length}`);
  }
  const out: number[] = [];
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) out.push(i);
  }
  return out;
}
