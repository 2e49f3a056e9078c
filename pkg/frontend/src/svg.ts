/**
 * Minimal deterministic SVG chart primitives.
 *
 * Everything renders through fixed-precision number formatting and stable
 * iteration orders, so the same inputs always produce byte-identical SVG.
 */

export const WIDTH = 860;
export const HEIGHT = 540;
export const MARGIN = { left: 86, right: 200, top: 36, bottom: 58 };

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export interface Scale {
  (value: number): number;
  ticks: number[];
  label(value: number): string;
}

function linearTicks(lo: number, hi: number, count = 6): number[] {
  if (hi <= lo) return [lo];
  const raw = (hi - lo) / count;
  const mag = 10 ** Math.floor(Math.log10(raw));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => (hi - lo) / s <= count)
    ?? 10 * mag;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi > lo ? hi - lo : 1;
  const scale = ((v: number) => outLo + ((v - lo) / span) * (outHi - outLo)) as Scale;
  scale.ticks = linearTicks(lo, hi);
  scale.label = (v) => {
    const a = Math.abs(v);
    if (a >= 1e6 || (a > 0 && a < 1e-3)) return v.toExponential(1).replace("+", "");
    return String(Number(v.toPrecision(6)));
  };
  return scale;
}

export function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const l0 = Math.log10(Math.max(lo, 1e-12));
  const l1 = Math.log10(Math.max(hi, lo * 10));
  const span = l1 > l0 ? l1 - l0 : 1;
  const scale = ((v: number) =>
    outLo + ((Math.log10(Math.max(v, 1e-12)) - l0) / span) * (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let d = Math.ceil(l0); d <= Math.floor(l1); d += 1) ticks.push(10 ** d);
  scale.ticks = ticks.length >= 2 ? ticks : [10 ** l0, 10 ** l1];
  scale.label = (v) => {
    const exp = Math.round(Math.log10(v));
    return `1e${exp}`;
  };
  return scale;
}

const PALETTE: Record<string, string> = {
  d2d: "#1f77b4",
  unicast: "#d62728",
  coded: "#2ca02c",
  harmonic: "#9467bd",
};
const FALLBACK_COLORS = ["#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

export function seriesColor(scheme: string, index: number): string {
  const base = scheme.replace(/^analytic:/, "").split("_")[0];
  return PALETTE[base] ?? FALLBACK_COLORS[index % FALLBACK_COLORS.length];
}

/** Solid for the office environment, dashed for the hotspot. */
export function seriesDash(environment: string): string {
  return environment === "hotspot" ? "7,4" : "none";
}

export interface Series {
  name: string;
  color: string;
  dash: string;
  points: Array<[number, number]>;
  step?: boolean;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  x: Scale;
  y: Scale;
  series: Series[];
  refLines?: Array<{ x: number; label: string }>;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(spec: ChartSpec): string {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(`<text x="${fmt((x0 + x1) / 2)}" y="20" text-anchor="middle" font-size="15">${esc(spec.title)}</text>`);

  for (const t of spec.x.ticks) {
    const px = spec.x(t);
    if (px < x0 - 0.5 || px > x1 + 0.5) continue;
    parts.push(`<line x1="${fmt(px)}" y1="${fmt(y0)}" x2="${fmt(px)}" y2="${fmt(y1)}" stroke="#dddddd"/>`);
    parts.push(`<text x="${fmt(px)}" y="${fmt(y0 + 18)}" text-anchor="middle" font-size="11">${esc(spec.x.label(t))}</text>`);
  }
  for (const t of spec.y.ticks) {
    const py = spec.y(t);
    if (py > y0 + 0.5 || py < y1 - 0.5) continue;
    parts.push(`<line x1="${fmt(x0)}" y1="${fmt(py)}" x2="${fmt(x1)}" y2="${fmt(py)}" stroke="#dddddd"/>`);
    parts.push(`<text x="${fmt(x0 - 6)}" y="${fmt(py + 4)}" text-anchor="end" font-size="11">${esc(spec.y.label(t))}</text>`);
  }
  parts.push(`<rect x="${fmt(x0)}" y="${fmt(y1)}" width="${fmt(x1 - x0)}" height="${fmt(y0 - y1)}" fill="none" stroke="#333333"/>`);
  parts.push(`<text x="${fmt((x0 + x1) / 2)}" y="${HEIGHT - 14}" text-anchor="middle" font-size="13">${esc(spec.xLabel)}</text>`);
  parts.push(`<text transform="rotate(-90 20 ${fmt((y0 + y1) / 2)})" x="20" y="${fmt((y0 + y1) / 2)}" text-anchor="middle" font-size="13">${esc(spec.yLabel)}</text>`);

  for (const ref of spec.refLines ?? []) {
    const px = spec.x(ref.x);
    parts.push(`<line class="ref" x1="${fmt(px)}" y1="${fmt(y0)}" x2="${fmt(px)}" y2="${fmt(y1)}" stroke="#555555" stroke-dasharray="3,3"/>`);
    parts.push(`<text x="${fmt(px + 4)}" y="${fmt(y1 + 14)}" font-size="11" fill="#555555">${esc(ref.label)}</text>`);
  }

  spec.series.forEach((s, i) => {
    const pts = s.step ? toSteps(s.points) : s.points;
    const coords = pts.map(([px, py]) => `${fmt(spec.x(px))},${fmt(spec.y(py))}`).join(" ");
    const dash = s.dash === "none" ? "" : ` stroke-dasharray="${s.dash}"`;
    parts.push(`<polyline class="series" fill="none" stroke="${s.color}" stroke-width="2"${dash} points="${coords}"/>`);
    if (!s.step) {
      for (const [px, py] of s.points) {
        parts.push(`<circle cx="${fmt(spec.x(px))}" cy="${fmt(spec.y(py))}" r="3" fill="${s.color}"/>`);
      }
    }
    const ly = y1 + 16 + i * 18;
    parts.push(`<line x1="${x1 + 12}" y1="${fmt(ly - 4)}" x2="${x1 + 40}" y2="${fmt(ly - 4)}" stroke="${s.color}" stroke-width="2"${dash}/>`);
    parts.push(`<text class="legend" x="${x1 + 46}" y="${fmt(ly)}" font-size="12">${esc(s.name)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function toSteps(points: Array<[number, number]>): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (let i = 0; i < points.length; i += 1) {
    if (i > 0) out.push([points[i][0], points[i - 1][1]]);
    out.push(points[i]);
  }
  return out;
}
