import { readFileSync } from "fs";
import Papa from "papaparse";
import { z } from "zod";

/** Sidecar written next to every series.csv by the trajectory CLI. */
export const SidecarSchema = z.object({
  schema_version: z.number().int(),
  observable: z.enum(["otoc", "renyi2", "twopoint"]),
  config: z.object({
    gate_set: z.string(),
    num_sites: z.number().int().positive(),
    local_dim: z.number().int(),
    boundary: z.string(),
    kappa: z.number(),
    dt: z.number(),
    t_max: z.number(),
    ensemble_size: z.number().int(),
    master_seed: z.number().int(),
    mode: z.string(),
    depth: z.number().nullable(),
    angle_stddev: z.number(),
    sample_every: z.number().int(),
    time_average_fraction: z.number(),
  }),
  sites: z.number().int().optional(),
  region: z.array(z.number().int()).optional(),
  initial_state: z.string().optional(),
  prediction: z.number().nullable(),
  prediction_basis: z.string().nullable(),
  time_average: z.number(),
  time_average_stderr: z.number(),
  time_average_window: z.tuple([z.number(), z.number()]),
});

export type Sidecar = z.infer<typeof SidecarSchema>;

export interface SeriesData {
  time: number[];
  mean: number[];
  stderr: number[];
}

export class SchemaError extends Error {}

export function loadSidecar(path: string): Sidecar {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new SchemaError(`${path}: not readable as JSON (${err})`);
  }
  const parsed = SidecarSchema.safeParse(raw);
  if (!parsed.success) {
    throw new SchemaError(`${path}: ${parsed.error.issues[0].message} at ${parsed.error.issues[0].path.join(".")}`);
  }
  return parsed.data;
}

/**
 * Parse a series.csv (columns time, mean, stderr, optional extras).
 * Empty files and files missing the three required columns are schema
 * errors: downstream plots would silently render nothing otherwise.
 */
export function loadSeriesCsv(path: string): SeriesData {
  const text = readFileSync(path, "utf8");
  const result = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (result.errors.length > 0) {
    throw new SchemaError(`${path}: ${result.errors[0].message}`);
  }
  const fields = result.meta.fields ?? [];
  for (const required of ["time", "mean", "stderr"]) {
    if (!fields.includes(required)) {
      throw new SchemaError(`${path}: missing column "${required}"`);
    }
  }
  if (result.data.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  const series: SeriesData = { time: [], mean: [], stderr: [] };
  for (const row of result.data) {
    const t = Number(row.time);
    const m = Number(row.mean);
    const s = Number(row.stderr);
    if (![t, m, s].every(Number.isFinite)) {
      throw new SchemaError(`${path}: non-numeric row ${JSON.stringify(row)}`);
    }
    series.time.push(t);
    series.mean.push(m);
    series.stderr.push(s);
  }
  return series;
}
