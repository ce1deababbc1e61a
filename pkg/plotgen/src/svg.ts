/** Deterministic SVG line-chart renderer.
 *
 * Fixed canvas, fixed palette, text as plain SVG elements: identical
 * inputs yield byte-identical files on every platform.  Pixel fidelity
 * is a non-goal — regression runs on the sidecar extrema instead.
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  dash?: string;
  width: number;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  yScale: "linear" | "log";
  series: Series[];
}

const W = 960;
const H = 600;
const MARGIN = { left: 78, right: 24, top: 42, bottom: 56 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

function fmt(v: number): string {
  // fixed-precision path coordinates keep files compact and stable
  return v.toFixed(2);
}

function tickValues(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * mag);
  const step = candidates.find((c) => span / c <= n) ?? candidates[4];
  const first = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
  }
  return out;
}

function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(parseFloat(v.toPrecision(6)));
}

export function renderChart(spec: ChartSpec): string {
  const xs = spec.series.flatMap((s) => s.x);
  let lo = Math.min(...xs);
  let hi = Math.max(...xs);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }

  const positiveFloor = 1e-30;
  const ysAll = spec.series.flatMap((s) => s.y);
  let yLo: number;
  let yHi: number;
  if (spec.yScale === "log") {
    const pos = ysAll.filter((v) => v > positiveFloor);
    yLo = Math.log10(pos.length ? Math.min(...pos) : positiveFloor);
    yHi = Math.log10(pos.length ? Math.max(...pos) : 1);
  } else {
    yLo = Math.min(...ysAll, 0);
    yHi = Math.max(...ysAll);
  }
  if (yLo === yHi) yHi = yLo + 1;

  const px = (v: number) =>
    MARGIN.left + ((v - lo) / (hi - lo)) * (W - MARGIN.left - MARGIN.right);
  const py = (v: number) => {
    const t = spec.yScale === "log" ? Math.log10(Math.max(v, positiveFloor)) : v;
    return (
      H - MARGIN.bottom -
      ((t - yLo) / (yHi - yLo)) * (H - MARGIN.top - MARGIN.bottom)
    );
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`,
  );
  parts.push(`<rect width="${W}" height="${H}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${W / 2}" y="24" text-anchor="middle" font-family="monospace" font-size="16">${escapeXml(spec.title)}</text>`,
  );

  // frame
  const x0 = MARGIN.left;
  const x1 = W - MARGIN.right;
  const y0 = H - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#000000"/>`,
  );

  for (const v of tickValues(lo, hi)) {
    const x = px(v);
    parts.push(`<line x1="${fmt(x)}" y1="${y0}" x2="${fmt(x)}" y2="${y0 + 5}" stroke="#000000"/>`);
    parts.push(
      `<text x="${fmt(x)}" y="${y0 + 20}" text-anchor="middle" font-family="monospace" font-size="12">${tickLabel(v)}</text>`,
    );
  }
  const yTicks =
    spec.yScale === "log"
      ? rangeInt(Math.ceil(yLo), Math.floor(yHi)).map((e) => Math.pow(10, e))
      : tickValues(yLo, yHi);
  for (const v of yTicks) {
    const y = py(v);
    parts.push(`<line x1="${x0 - 5}" y1="${fmt(y)}" x2="${x0}" y2="${fmt(y)}" stroke="#000000"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${fmt(y + 4)}" text-anchor="end" font-family="monospace" font-size="12">${tickLabel(v)}</text>`,
    );
  }

  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${H - 14}" text-anchor="middle" font-family="monospace" font-size="14">${escapeXml(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="20" y="${(y0 + y1) / 2}" text-anchor="middle" font-family="monospace" font-size="14" transform="rotate(-90 20 ${(y0 + y1) / 2})">${escapeXml(spec.yLabel)}</text>`,
  );

  for (const s of spec.series) {
    const pts: string[] = [];
    for (let i = 0; i < s.x.length; i++) {
      pts.push(`${fmt(px(s.x[i]))},${fmt(py(s.y[i]))}`);
    }
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="${s.color}" stroke-width="${s.width}"${dash}/>`,
    );
  }

  // legend, upper right inside the frame
  spec.series.forEach((s, i) => {
    const ly = y1 + 18 + 18 * i;
    const lx = x1 - 220;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 28}" y2="${ly - 4}" stroke="${s.color}" stroke-width="${s.width}"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`,
    );
    parts.push(
      `<text x="${lx + 34}" y="${ly}" font-family="monospace" font-size="12">${escapeXml(s.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function rangeInt(a: number, b: number): number[] {
  const out: number[] = [];
  for (let v = a; v <= b; v++) out.push(v);
  return out;
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
