/** Tiny SVG string builder plus the linear scales the figures need. */

export type Attrs = Record<string, string | number>;

export function el(tag: string, attrs: Attrs, ...children: string[]): string {
  const parts = Object.entries(attrs).map(([k, v]) => `${k}="${v}"`);
  const open = [tag, ...parts].join(" ");
  if (children.length === 0) {
    return `<${open}/>`;
  }
  return `<${open}>${children.join("")}</${tag}>`;
}

export function fmt(x: number): string {
  // fixed precision keeps output byte-stable across runs
  return Number(x.toFixed(3)).toString();
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

/** Round-valued tick positions covering the domain, roughly `count` of them. */
export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  const span = hi - lo;
  if (span <= 0) return [lo];
  const rawStep = span / count;
  const power = Math.floor(Math.log10(rawStep));
  const base = rawStep / 10 ** power;
  const niceBase = base < 1.5 ? 1 : base < 3.5 ? 2 : base < 7.5 ? 5 : 10;
  const step = niceBase * 10 ** power;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Number(v.toFixed(12)));
  }
  return out;
}

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 640,
  height: 420,
  margin: { top: 24, right: 24, bottom: 48, left: 64 },
};

export function axes(frame: Frame, x: Scale, y: Scale, xLabel: string, yLabel: string): string {
  const { margin, width, height } = frame;
  const pieces: string[] = [];
  const bottom = height - margin.bottom;
  pieces.push(el("line", {
    "data-role": "axis", x1: margin.left, y1: bottom, x2: width - margin.right,
    y2: bottom, stroke: "black",
  }));
  pieces.push(el("line", {
    "data-role": "axis", x1: margin.left, y1: margin.top, x2: margin.left,
    y2: bottom, stroke: "black",
  }));
  for (const t of ticks(x.domain)) {
    const px = fmt(x(t));
    pieces.push(el("line", { x1: px, y1: bottom, x2: px, y2: bottom + 5, stroke: "black" }));
    pieces.push(el("text", {
      x: px, y: bottom + 20, "text-anchor": "middle", "font-size": 12,
    }, String(t)));
  }
  for (const t of ticks(y.domain)) {
    const py = fmt(y(t));
    pieces.push(el("line", { x1: margin.left - 5, y1: py, x2: margin.left, y2: py, stroke: "black" }));
    pieces.push(el("text", {
      x: margin.left - 8, y: py, "text-anchor": "end", "dominant-baseline": "middle",
      "font-size": 12,
    }, String(Number(t.toFixed(6)))));
  }
  pieces.push(el("text", {
    x: (margin.left + width - margin.right) / 2, y: height - 8,
    "text-anchor": "middle", "font-size": 14,
  }, xLabel));
  pieces.push(el("text", {
    x: 16, y: (margin.top + bottom) / 2, "text-anchor": "middle", "font-size": 14,
    transform: `rotate(-90 16 ${(margin.top + bottom) / 2})`,
  }, yLabel));
  return pieces.join("\n");
}

export function legend(frame: Frame, entries: Array<{ label: string; color: string }>): string {
  const x0 = frame.width - frame.margin.right - 180;
  const rows = entries.map((entry, i) => {
    const y = frame.margin.top + 12 + 18 * i;
    return [
      el("line", { x1: x0, y1: y, x2: x0 + 24, y2: y, stroke: entry.color, "stroke-width": 2 }),
      el("text", {
        "data-role": "legend", x: x0 + 30, y: y + 4, "font-size": 12,
      }, entry.label),
    ].join("");
  });
  return rows.join("\n");
}

export function document(frame: Frame, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">`,
    el("rect", { width: frame.width, height: frame.height, fill: "white" }),
    body,
    "</svg>",
    "",
  ].join("\n");
}
