/**
 * Client-side bookkeeping: form parsing, input validation, and the view
 * state assembled from server responses. Nothing here computes statistics;
 * the view state is a verbatim arrangement of numbers the service sent.
 */

import type { Forecast, Recommendation, SessionInfo } from "./api.js";

export interface ParsedCsv {
  arms: string[];
  counts: Record<string, Record<string, number>>;
}

/**
 * Parse pasted initial counts: one `arm,label[,count]` row per line.
 * An optional header row is skipped; blank lines are ignored; anything
 * else malformed raises with its 1-based line number.
 */
export function parseCountsCsv(text: string): ParsedCsv {
  const counts: Record<string, Record<string, number>> = {};
  const arms: string[] = [];
  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    const raw = lines[i]!;
    const lineNo = i + 1;
    const cells = raw.split(",").map((c) => c.trim());
    if (cells.every((c) => c === "")) continue;
    if (i === 0 && cells[0]?.toLowerCase() === "arm" && cells[1]?.toLowerCase() === "label") {
      continue;
    }
    if (cells.length < 2 || cells.length > 3) {
      throw new Error(`line ${lineNo}: expected arm,label[,count]`);
    }
    const [arm, label] = cells as [string, string];
    if (arm === "" || label === "") {
      throw new Error(`line ${lineNo}: empty arm or label`);
    }
    const count = cells.length === 3 ? parsePositiveInt(cells[2]!, lineNo) : 1;
    if (!(arm in counts)) {
      counts[arm] = {};
      arms.push(arm);
    }
    counts[arm]![label] = (counts[arm]![label] ?? 0) + count;
  }
  if (arms.length === 0) throw new Error("no data rows");
  return { arms, counts };
}

function parsePositiveInt(cell: string, lineNo: number): number {
  if (!/^\d+$/.test(cell)) {
    throw new Error(`line ${lineNo}: count must be a positive integer, got ${JSON.stringify(cell)}`);
  }
  const n = Number(cell);
  if (n < 1) throw new Error(`line ${lineNo}: count must be a positive integer, got ${cell}`);
  return n;
}

export interface ObservationRow {
  label: string;
  count: string;
}

/** Validate observation entry rows into the counts payload. */
export function collectObservation(rows: ObservationRow[]): Record<string, number> {
  const counts: Record<string, number> = {};
  for (const row of rows) {
    const label = row.label.trim();
    const countText = row.count.trim();
    if (label === "" && countText === "") continue;
    if (label === "") throw new Error("a row has a count but no label");
    if (!/^\d+$/.test(countText) || Number(countText) < 1) {
      throw new Error(`count for ${JSON.stringify(label)} must be a positive integer`);
    }
    counts[label] = (counts[label] ?? 0) + Number(countText);
  }
  if (Object.keys(counts).length === 0) throw new Error("enter at least one label");
  return counts;
}

/** Everything the dashboard renders, all of it server-sent. */
export interface SessionView {
  info: SessionInfo;
  forecasts: Forecast[];
  recommendations: Recommendation[];
  /** what-if cache: budget -> forecasts at that budget, as returned */
  whatif: Map<number, Forecast[]>;
}

export function newView(info: SessionInfo, forecasts: Forecast[]): SessionView {
  return { info, forecasts, recommendations: [], whatif: new Map() };
}

/** Trailing debounce; used to keep the what-if slider at <= 4 req/s. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => fn(...args), waitMs);
  };
}
