import { writeFileSync } from "fs";
import { loadSidecar, SchemaError, Sidecar } from "./schema.js";
import { axes, DEFAULT_FRAME, document, el, fmt, Frame, legend, linearScale } from "./svg.js";

function binomial(n: number, k: number): number {
  if (k < 0 || k > n) return 0;
  let out = 1;
  for (let i = 0; i < Math.min(k, n - k); i++) {
    out = (out * (n - i)) / (i + 1);
  }
  return out;
}

/**
 * Late-time purity of a length-ell edge block on an L-site chain under the
 * two ensembles the chain simulator predicts: the unconstrained one and the
 * parity-conserving quadratic one.
 */
export function closedFormPurity(L: number, ell: number, kind: "universal" | "matchgate"): number {
  if (ell < 0 || ell > L) {
    throw new RangeError("subsystem size must satisfy 0 <= ell <= L");
  }
  if (kind === "universal") {
    const num = 2 ** ell - 2 ** -ell + 2 ** (L - ell) - 2 ** (ell - L);
    return num / (2 ** L - 2 ** -L);
  }
  let total = 0;
  for (let k = 0; 2 * k <= 2 * (L - ell); k++) {
    total += (binomial(L, k) * binomial(2 * (L - ell), 2 * k)) / binomial(2 * L, 2 * k);
  }
  return total / 2 ** (L - ell);
}

export interface PagePoint {
  ell: number;
  entropy: number;
  sigma: number; // relative stderr of the purity = absolute stderr of the entropy
}

export function pointFromSidecar(sidecar: Sidecar, path = "sidecar"): PagePoint {
  if (sidecar.observable !== "renyi2") {
    throw new SchemaError(`${path}: observable "${sidecar.observable}" is not a purity series`);
  }
  if (!sidecar.region) {
    throw new SchemaError(`${path}: renyi2 sidecar lacks a region`);
  }
  return {
    ell: sidecar.region.length,
    entropy: -Math.log(sidecar.time_average),
    sigma: sidecar.time_average_stderr / sidecar.time_average,
  };
}

function overlay(L: number, kind: "universal" | "matchgate", x: (v: number) => number,
                 y: (v: number) => number, color: string): string {
  const pts: string[] = [];
  for (let ell = 0; ell <= L; ell++) {
    pts.push(`${fmt(x(ell))},${fmt(y(-Math.log(closedFormPurity(L, ell, kind))))}`);
  }
  return el("path", {
    "data-role": `overlay-${kind}`, d: `M${pts.join("L")}`,
    fill: "none", stroke: color, "stroke-width": 1.5,
  });
}

export function buildPageCurveSvg(sidecars: Sidecar[], frame: Frame = DEFAULT_FRAME): string {
  if (sidecars.length < 2) {
    throw new SchemaError(`need at least 2 subsystem sizes, got ${sidecars.length}`);
  }
  const L = sidecars[0].config.num_sites;
  if (!sidecars.every((s) => s.config.num_sites === L)) {
    throw new SchemaError("sidecars mix different chain lengths");
  }
  const points = sidecars
    .map((s) => pointFromSidecar(s))
    .sort((a, b) => a.ell - b.ell);

  const maxS = Math.max(
    ...points.map((p) => p.entropy),
    -Math.log(closedFormPurity(L, Math.floor(L / 2), "universal")),
  );
  const x = linearScale([0, L], [frame.margin.left, frame.width - frame.margin.right]);
  const y = linearScale([0, 1.1 * maxS], [frame.height - frame.margin.bottom, frame.margin.top]);

  const body: string[] = [axes(frame, x, y, "subsystem size", "second Renyi entropy")];
  body.push(overlay(L, "universal", x, y, "#1f77b4"));
  body.push(overlay(L, "matchgate", x, y, "#d62728"));
  for (const p of points) {
    const px = fmt(x(p.ell));
    body.push(el("line", {
      "data-role": "errorbar",
      x1: px, y1: fmt(y(p.entropy - 3 * p.sigma)), x2: px, y2: fmt(y(p.entropy + 3 * p.sigma)),
      stroke: "black",
    }));
    body.push(el("circle", {
      "data-role": "point", "data-ell": p.ell,
      cx: px, cy: fmt(y(p.entropy)), r: 3.5, fill: "black",
    }));
  }
  body.push(legend(frame, [
    { label: "unconstrained prediction", color: "#1f77b4" },
    { label: "quadratic-parity prediction", color: "#d62728" },
    { label: `${sidecars[0].config.gate_set} L=${L} data`, color: "black" },
  ]));
  return document(frame, body.join("\n"));
}

export function plotPageCurve(sidecarPaths: string[], outPath: string): void {
  const sidecars = sidecarPaths.map((p) => loadSidecar(p));
  writeFileSync(outPath, buildPageCurveSvg(sidecars));
}
