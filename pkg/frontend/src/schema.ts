/**
 * Readers for the simulator's result CSVs.
 *
 * Both files start with a version line `# d2dcache-results schema_version=N`
 * followed by a fixed header. Readers refuse version or header mismatches
 * (naming both versions) and empty data sections; they never modify inputs.
 */
import Papa from "papaparse";

export const SCHEMA_VERSION = 1;

export const RESULT_FIELDS = [
  "schema_version", "scheme", "environment", "n", "m", "M", "gamma_r",
  "cluster_side", "band_split", "c_r0", "p_o", "t_min_bps", "tier_self",
  "tier_mmwave", "tier_uwave", "tier_bs", "tier_outage", "realizations",
  "seed",
] as const;

export const USER_FIELDS = [
  "schema_version", "scheme", "environment", "n", "m", "M", "gamma_r",
  "cluster_side", "band_split", "realization", "user", "tier",
  "throughput_bps", "seed",
] as const;

export interface ResultRow {
  scheme: string;
  environment: string;
  n: number;
  m: number;
  M: number;
  gammaR: number;
  clusterSide: number | null;
  bandSplit: number | null;
  cR0: number | null;
  pO: number;
  tMinBps: number;
  realizations: number;
  seed: number;
}

export interface UserRow {
  scheme: string;
  environment: string;
  clusterSide: number | null;
  bandSplit: number | null;
  realization: number;
  user: number;
  tier: string;
  throughputBps: number;
}

function splitVersioned(text: string, source: string): { header: string[]; records: string[][] } {
  const lines = text.split(/\r?\n/);
  const versionLine = lines[0] ?? "";
  const match = versionLine.match(/^#.*schema_version=(\d+)\s*$/);
  if (!match) {
    throw new Error(`${source}: missing schema version line`);
  }
  const fileVersion = Number(match[1]);
  if (fileVersion !== SCHEMA_VERSION) {
    throw new Error(
      `${source}: schema version mismatch (file ${fileVersion}, renderer ${SCHEMA_VERSION})`);
  }
  const body = lines.slice(1).join("\n");
  const parsed = Papa.parse<string[]>(body.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new Error(`${source}: CSV parse error: ${parsed.errors[0].message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new Error(`${source}: empty file`);
  }
  return { header: rows[0], records: rows.slice(1) };
}

function num(value: string): number {
  const x = Number(value);
  if (value === "" || Number.isNaN(x)) {
    throw new Error(`expected a number, got ${JSON.stringify(value)}`);
  }
  return x;
}

function optNum(value: string): number | null {
  return value === "" ? null : num(value);
}

function checkHeader(header: string[], expected: readonly string[], source: string): void {
  if (header.length !== expected.length || header.some((h, i) => h !== expected[i])) {
    throw new Error(`${source}: unexpected header; expected ${expected.join(",")}`);
  }
}

export function readResultsCsv(text: string, source: string): ResultRow[] {
  const { header, records } = splitVersioned(text, source);
  checkHeader(header, RESULT_FIELDS, source);
  if (records.length === 0) {
    throw new Error(`${source}: no data rows`);
  }
  return records.map((r) => ({
    scheme: r[1],
    environment: r[2],
    n: num(r[3]),
    m: num(r[4]),
    M: num(r[5]),
    gammaR: num(r[6]),
    clusterSide: optNum(r[7]),
    bandSplit: optNum(r[8]),
    cR0: optNum(r[9]),
    pO: num(r[10]),
    tMinBps: num(r[11]),
    realizations: num(r[17]),
    seed: num(r[18]),
  }));
}

export function readUsersCsv(text: string, source: string): UserRow[] {
  const { header, records } = splitVersioned(text, source);
  checkHeader(header, USER_FIELDS, source);
  if (records.length === 0) {
    throw new Error(`${source}: no data rows`);
  }
  return records.map((r) => ({
    scheme: r[1],
    environment: r[2],
    clusterSide: optNum(r[7]),
    bandSplit: optNum(r[8]),
    realization: num(r[9]),
    user: num(r[10]),
    tier: r[11],
    throughputBps: num(r[12]),
  }));
}
