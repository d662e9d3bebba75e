/**
 * Hand-rolled SVG charts. The values plotted are taken verbatim from
 * server responses; this module only maps them to pixels.
 */

import type { CurvePoint, Forecast } from "./api.js";

const W = 420;
const H = 180;
const PAD = 28;

function svgEl(tag: string, attrs: Record<string, string | number>): SVGElement {
  const el = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

function scale(domainMax: number, rangePx: number): (v: number) => number {
  const m = domainMax > 0 ? domainMax : 1;
  return (v) => (v / m) * rangePx;
}

/** Cumulative distinct species vs. event sequence number. */
export function discoveryCurve(points: CurvePoint[]): SVGElement {
  const svg = svgEl("svg", { width: W, height: H, viewBox: `0 0 ${W} ${H}` });
  svg.appendChild(svgEl("line", { x1: PAD, y1: H - PAD, x2: W - 8, y2: H - PAD, stroke: "#999" }));
  svg.appendChild(svgEl("line", { x1: PAD, y1: 8, x2: PAD, y2: H - PAD, stroke: "#999" }));
  if (points.length === 0) return svg;

  const maxSeq = Math.max(...points.map((p) => p.seq), 1);
  const maxY = Math.max(...points.map((p) => p.distinct), 1);
  const sx = scale(maxSeq, W - PAD - 8);
  const sy = scale(maxY, H - PAD - 8);

  const path = points
    .map((p, i) => `${i === 0 ? "M" : "L"}${PAD + sx(p.seq)},${H - PAD - sy(p.distinct)}`)
    .join(" ");
  svg.appendChild(svgEl("path", { d: path, fill: "none", stroke: "#2266cc", "stroke-width": 2 }));
  for (const p of points) {
    const dot = svgEl("circle", {
      cx: PAD + sx(p.seq),
      cy: H - PAD - sy(p.distinct),
      r: 3,
      fill: "#2266cc",
    });
    dot.setAttribute("data-seq", String(p.seq));
    dot.setAttribute("data-distinct", String(p.distinct));
    svg.appendChild(dot);
  }
  const label = svgEl("text", { x: W - 8, y: H - 8, "text-anchor": "end", "font-size": 10 });
  label.textContent = `distinct species through event ${points[points.length - 1]!.seq}`;
  svg.appendChild(label);
  return svg;
}

const ARM_COLORS = ["#2266cc", "#cc5522", "#22885b", "#8844aa", "#aa8822", "#557788"];

/**
 * What-if curves: per-arm forecast mean vs. budget, with a 10-90% band.
 * `byBudget` maps each explored budget to the forecasts the server sent.
 */
export function whatifCurves(byBudget: Map<number, Forecast[]>): SVGElement {
  const svg = svgEl("svg", { width: W, height: H, viewBox: `0 0 ${W} ${H}` });
  svg.appendChild(svgEl("line", { x1: PAD, y1: H - PAD, x2: W - 8, y2: H - PAD, stroke: "#999" }));
  svg.appendChild(svgEl("line", { x1: PAD, y1: 8, x2: PAD, y2: H - PAD, stroke: "#999" }));
  const budgets = [...byBudget.keys()].sort((a, b) => a - b);
  if (budgets.length === 0) return svg;

  const arms = byBudget.get(budgets[0]!)!.map((f) => f.arm);
  let maxY = 0;
  for (const fs of byBudget.values()) {
    for (const f of fs) maxY = Math.max(maxY, f.quantiles["0.9"] ?? f.mean);
  }
  const sx = scale(Math.max(...budgets, 1), W - PAD - 8);
  const sy = scale(maxY, H - PAD - 8);
  const px = (m: number) => PAD + sx(m);
  const py = (v: number) => H - PAD - sy(v);

  arms.forEach((arm, j) => {
    const color = ARM_COLORS[j % ARM_COLORS.length]!;
    const rows = budgets.map((m) => byBudget.get(m)!.find((f) => f.arm === arm)!);
    if (budgets.length > 1) {
      const upper = budgets.map((m, i) => `${i === 0 ? "M" : "L"}${px(m)},${py(rows[i]!.quantiles["0.9"] ?? rows[i]!.mean)}`);
      const lower = [...budgets].reverse().map((m, i) => {
        const r = rows[budgets.length - 1 - i]!;
        return `L${px(m)},${py(r.quantiles["0.1"] ?? r.mean)}`;
      });
      svg.appendChild(
        svgEl("path", { d: upper.join(" ") + " " + lower.join(" ") + " Z", fill: color, opacity: 0.12 }),
      );
    }
    const line = budgets
      .map((m, i) => `${i === 0 ? "M" : "L"}${px(m)},${py(rows[i]!.mean)}`)
      .join(" ");
    svg.appendChild(svgEl("path", { d: line, fill: "none", stroke: color, "stroke-width": 2 }));
    const tag = svgEl("text", { x: W - 8, y: 14 + 12 * j, "text-anchor": "end", "font-size": 10, fill: color });
    tag.textContent = arm;
    svg.appendChild(tag);
  });
  return svg;
}
