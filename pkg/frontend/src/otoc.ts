import { writeFileSync } from "fs";
import { loadSeriesCsv, loadSidecar, SchemaError, SeriesData, Sidecar } from "./schema.js";
import { axes, DEFAULT_FRAME, document, el, fmt, Frame, legend, linearScale } from "./svg.js";

export interface OtocRun {
  series: SeriesData;
  sidecar: Sidecar;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function bandPath(series: SeriesData, x: (v: number) => number, y: (v: number) => number): string {
  const upper = series.time.map((t, i) =>
    `${fmt(x(t))},${fmt(y(series.mean[i] + series.stderr[i]))}`);
  const lower = series.time.map((t, i) =>
    `${fmt(x(t))},${fmt(y(series.mean[i] - series.stderr[i]))}`).reverse();
  return `M${upper.join("L")}L${lower.join("L")}Z`;
}

/** Render one or more OTOC runs: mean line, stderr band, and the sidecar's
 *  predicted saturation value as a horizontal dashed line. */
export function buildOtocSvg(runs: OtocRun[], frame: Frame = DEFAULT_FRAME): string {
  if (runs.length === 0) {
    throw new SchemaError("no runs to plot");
  }
  const allTimes = runs.flatMap((r) => r.series.time);
  const allValues = runs.flatMap((r) => [
    ...r.series.mean.map((m, i) => m + r.series.stderr[i]),
    ...r.series.mean.map((m, i) => m - r.series.stderr[i]),
    ...(r.sidecar.prediction === null ? [] : [r.sidecar.prediction]),
  ]);
  const pad = 0.05 * (Math.max(...allValues) - Math.min(...allValues) || 1);
  const x = linearScale(
    [Math.min(...allTimes), Math.max(...allTimes)],
    [frame.margin.left, frame.width - frame.margin.right],
  );
  const y = linearScale(
    [Math.min(...allValues) - pad, Math.max(...allValues) + pad],
    [frame.height - frame.margin.bottom, frame.margin.top],
  );

  const body: string[] = [axes(frame, x, y, "time", "OTOC")];
  const entries: Array<{ label: string; color: string }> = [];
  runs.forEach((run, i) => {
    const color = PALETTE[i % PALETTE.length];
    const cfg = run.sidecar.config;
    body.push(el("path", {
      "data-role": "band", d: bandPath(run.series, x, y),
      fill: color, "fill-opacity": 0.2, stroke: "none",
    }));
    const points = run.series.time
      .map((t, j) => `${fmt(x(t))},${fmt(y(run.series.mean[j]))}`)
      .join(" ");
    body.push(el("polyline", {
      "data-role": "series", points, fill: "none", stroke: color, "stroke-width": 1.5,
    }));
    if (run.sidecar.prediction !== null) {
      const py = fmt(y(run.sidecar.prediction));
      body.push(el("line", {
        "data-role": "saturation",
        "data-value": run.sidecar.prediction,
        x1: x.range[0], y1: py, x2: x.range[1], y2: py,
        stroke: color, "stroke-dasharray": "6 4", "stroke-width": 1.5,
      }));
    }
    entries.push({ label: `${cfg.gate_set} L=${cfg.num_sites}`, color });
  });
  body.push(legend(frame, entries));
  return document(frame, body.join("\n"));
}

export function plotOtoc(pairs: Array<{ csv: string; sidecar: string }>, outPath: string): void {
  const runs = pairs.map((p) => {
    const sidecar = loadSidecar(p.sidecar);
    if (sidecar.observable !== "otoc" && sidecar.observable !== "twopoint") {
      throw new SchemaError(`${p.sidecar}: observable "${sidecar.observable}" is not a time-series correlator`);
    }
    return { series: loadSeriesCsv(p.csv), sidecar };
  });
  writeFileSync(outPath, buildOtocSvg(runs));
}
