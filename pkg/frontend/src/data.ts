/**
 * Readers for the simulator's file outputs.
 *
 * A run directory holds, per instance stem:
 *   <stem>.<dynamic>.csv   trajectory log, header t,x_1,...,x_n,U
 *   <stem>.bounds.json     bounds report with u_min / u_max
 *   <stem>.summary.json    run summary (not needed for plotting)
 */

import { readdirSync, readFileSync } from "fs";
import path from "path";

export const DYNAMICS = ["ssd", "nbrd", "nrpm"] as const;
export type Dynamic = (typeof DYNAMICS)[number];

export interface Trajectory {
  dynamic: Dynamic;
  file: string;
  t: number[];
  /** node masses, x[i] is the series for column x_{i+1} */
  x: number[][];
  U: number[];
}

export interface Bounds {
  uMin: number;
  uMax: number;
  file: string;
}

export class DataError extends Error {}

// ---------------------------------------------------------------------------
// Trajectory CSV
// ---------------------------------------------------------------------------

export function parseTrajectoryCsv(
  text: string,
  dynamic: Dynamic,
  file: string
): Trajectory {
  const lines = text.split(/\r?\n/).filter((l) => l.trim() !== "");
  if (lines.length === 0) {
    throw new DataError(`${file}: empty file`);
  }
  const header = lines[0].split(",");
  const n = header.length - 2;
  if (
    n < 1 ||
    header[0] !== "t" ||
    header[header.length - 1] !== "U" ||
    !header.slice(1, -1).every((h, i) => h === `x_${i + 1}`)
  ) {
    throw new DataError(`${file}: unexpected header "${lines[0]}"`);
  }
  if (lines.length === 1) {
    throw new DataError(`${file}: no data rows`);
  }
  const t: number[] = [];
  const U: number[] = [];
  const x: number[][] = Array.from({ length: n }, () => []);
  for (const line of lines.slice(1)) {
    const cells = line.split(",").map(Number);
    if (cells.length !== header.length || cells.some((v) => !Number.isFinite(v))) {
      throw new DataError(`${file}: bad row "${line}"`);
    }
    t.push(cells[0]);
    for (let i = 0; i < n; i++) x[i].push(cells[1 + i]);
    U.push(cells[n + 1]);
  }
  return { dynamic, file, t, x, U };
}

/** Load every <stem>.<dynamic>.csv in dir, in ssd, nbrd, nrpm order. */
export function discoverTrajectories(dir: string): Trajectory[] {
  const files = readdirSync(dir);
  const found: Trajectory[] = [];
  for (const dyn of DYNAMICS) {
    for (const f of files.sort()) {
      if (f.endsWith(`.${dyn}.csv`)) {
        const text = readFileSync(path.join(dir, f), "utf8");
        found.push(parseTrajectoryCsv(text, dyn, f));
      }
    }
  }
  return found;
}

// ---------------------------------------------------------------------------
// Bounds report
// ---------------------------------------------------------------------------

/** Load the first <stem>.bounds.json in dir, or null when absent. */
export function readBounds(dir: string): Bounds | null {
  const file = readdirSync(dir)
    .sort()
    .find((f) => f.endsWith(".bounds.json"));
  if (!file) return null;
  const raw = JSON.parse(readFileSync(path.join(dir, file), "utf8"));
  if (typeof raw.u_min !== "number" || typeof raw.u_max !== "number") {
    throw new DataError(`${file}: missing u_min/u_max`);
  }
  return { uMin: raw.u_min, uMax: raw.u_max, file };
}
