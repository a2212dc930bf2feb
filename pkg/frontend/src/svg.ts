import { BarGroup, Series } from "./aggregate.js";

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { top: 24, right: 24, bottom: 56, left: 72 };

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

interface Scale {
  (v: number): number;
  domain: [number, number];
}

function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  return fn;
}

function niceTicks([lo, hi]: [number, number], count = 6): number[] {
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / s) * s; t <= hi + 1e-12; t += s) {
    ticks.push(Number(t.toPrecision(12)));
  }
  return ticks;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(v: number): string {
  if (Number.isInteger(v)) return String(v);
  const a = Math.abs(v);
  if (a !== 0 && (a < 0.001 || a >= 1e6)) return v.toExponential(2);
  return String(Number(v.toPrecision(6)));
}

function axes(xs: Scale, ys: Scale, xLabel: string, yLabel: string,
              xTickValues?: number[]): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  for (const t of xTickValues ?? niceTicks(xs.domain)) {
    const px = xs(t);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="black"/>`);
    parts.push(`<text x="${px}" y="${y0 + 20}" text-anchor="middle" font-size="11">${fmt(t)}</text>`);
  }
  for (const t of niceTicks(ys.domain)) {
    const py = ys(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
    parts.push(`<text x="${x0 - 8}" y="${py + 4}" text-anchor="end" font-size="11">${fmt(t)}</text>`);
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="13">${esc(xLabel)}</text>`);
  parts.push(`<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`);
  return parts.join("\n");
}

function legend(names: string[]): string {
  const parts: string[] = [];
  names.forEach((name, i) => {
    const y = MARGIN.top + 8 + i * 18;
    const x = WIDTH - MARGIN.right - 130;
    const color = PALETTE[i % PALETTE.length];
    parts.push(`<g class="legend-item">` +
      `<rect x="${x}" y="${y - 8}" width="14" height="10" fill="${color}"/>` +
      `<text x="${x + 20}" y="${y}" font-size="12">${esc(name)}</text></g>`);
  });
  return parts.join("\n");
}

function wrap(body: string): string {
  return `<?xml version="1.0" encoding="UTF-8"?>\n` +
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}">\n<rect width="${WIDTH}" height="${HEIGHT}" ` +
    `fill="white"/>\n${body}\n</svg>\n`;
}

/** Mean lines with min-max bands, one color per series. */
export function lineChart(series: Series[], xLabel: string, yLabel: string): string {
  const points = series.flatMap((s) => s.points);
  const xDomain: [number, number] = [
    Math.min(...points.map((p) => p.x)),
    Math.max(...points.map((p) => p.x)),
  ];
  const yLo = Math.min(...points.map((p) => p.min));
  const yHi = Math.max(...points.map((p) => p.max));
  const pad = (yHi - yLo || Math.abs(yHi) || 1) * 0.05;
  const xs = linearScale(xDomain, [MARGIN.left, WIDTH - MARGIN.right]);
  const ys = linearScale([yLo - pad, yHi + pad],
                         [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const parts: string[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const band = [
      ...s.points.map((p) => `${xs(p.x)},${ys(p.max)}`),
      ...[...s.points].reverse().map((p) => `${xs(p.x)},${ys(p.min)}`),
    ].join(" ");
    parts.push(`<polygon class="band" points="${band}" fill="${color}" opacity="0.15"/>`);
    const line = s.points.map((p) => `${xs(p.x)},${ys(p.mean)}`).join(" ");
    parts.push(`<polyline class="mean-line" points="${line}" fill="none" ` +
      `stroke="${color}" stroke-width="2"/>`);
    for (const p of s.points) {
      parts.push(`<circle cx="${xs(p.x)}" cy="${ys(p.mean)}" r="3" fill="${color}"/>`);
    }
  });
  const xTicks = [...new Set(points.map((p) => p.x))].sort((a, b) => a - b);
  parts.push(axes(xs, ys, xLabel, yLabel,
                  xTicks.length <= 12 ? xTicks : undefined));
  if (series.length > 1 || series[0].name !== "all") {
    parts.push(legend(series.map((s) => s.name)));
  }
  return wrap(parts.join("\n"));
}

/** One bar per category with min-max whiskers. */
export function barChart(groups: BarGroup[], xLabel: string, yLabel: string): string {
  const yHi = Math.max(...groups.map((g) => g.max));
  const ys = linearScale([0, yHi * 1.05 || 1],
                         [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const slot = innerW / groups.length;
  const barW = slot * 0.6;
  const parts: string[] = [];
  groups.forEach((g, i) => {
    const cx = MARGIN.left + slot * (i + 0.5);
    const color = PALETTE[i % PALETTE.length];
    const top = ys(g.mean);
    parts.push(`<rect class="bar" x="${cx - barW / 2}" y="${top}" width="${barW}" ` +
      `height="${HEIGHT - MARGIN.bottom - top}" fill="${color}" opacity="0.85"/>`);
    parts.push(`<line x1="${cx}" y1="${ys(g.min)}" x2="${cx}" y2="${ys(g.max)}" ` +
      `stroke="black" stroke-width="1.5"/>`);
    parts.push(`<text x="${cx}" y="${HEIGHT - MARGIN.bottom + 20}" ` +
      `text-anchor="middle" font-size="12">${esc(g.category)}</text>`);
    parts.push(`<text x="${cx}" y="${top - 6}" text-anchor="middle" ` +
      `font-size="10">${fmt(g.mean)}</text>`);
  });
  const x0 = MARGIN.left;
  const y0 = HEIGHT - MARGIN.bottom;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${WIDTH - MARGIN.right}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${MARGIN.top}" stroke="black"/>`);
  for (const t of niceTicks(ys.domain)) {
    const py = ys(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`);
    parts.push(`<text x="${x0 - 8}" y="${py + 4}" text-anchor="end" font-size="11">${fmt(t)}</text>`);
  }
  parts.push(`<text x="${(x0 + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 12}" ` +
    `text-anchor="middle" font-size="13">${esc(xLabel)}</text>`);
  parts.push(`<text x="18" y="${(y0 + MARGIN.top) / 2}" text-anchor="middle" ` +
    `font-size="13" transform="rotate(-90 18 ${(y0 + MARGIN.top) / 2})">${esc(yLabel)}</text>`);
  return wrap(parts.join("\n"));
}
