/**
 * Minimal SVG scene builder: linear scales, axes, and primitive marks.
 * No DOM, no dependencies; output is a deterministic string.
 */

import { theme } from "./theme.js";

export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

export function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!isFinite(lo) || !isFinite(hi)) return [];
  if (lo === hi) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10((hi - lo) / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((s) => (hi - lo) / s <= count) ?? 10 * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12; v += chosen) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

const esc = (value: string) =>
  value.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class Svg {
  private parts: string[] = [];

  constructor(
    public readonly width: number = theme.width,
    public readonly height: number = theme.height
  ) {
    this.parts.push(
      `<rect x="0" y="0" width="${width}" height="${height}" fill="${theme.background}"/>`
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, strokeWidth = 1, dash = ""): void {
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${strokeWidth}"${dashAttr}/>`
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, strokeWidth = 1.5): void {
    const path = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${path}" fill="none" stroke="${stroke}" stroke-width="${strokeWidth}"/>`
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(Math.max(w, 0))}" height="${fmt(Math.max(h, 0))}" fill="${fill}"/>`
    );
  }

  circle(x: number, y: number, r: number, fill: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${fill}"/>`);
  }

  text(
    x: number,
    y: number,
    content: string,
    options: { size?: number; anchor?: "start" | "middle" | "end"; fill?: string; rotate?: number } = {}
  ): void {
    const size = options.size ?? theme.fontSize;
    const anchor = options.anchor ?? "start";
    const fill = options.fill ?? theme.axis;
    const transform = options.rotate ? ` transform="rotate(${options.rotate} ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-family="${theme.fontFamily}" font-size="${size}" text-anchor="${anchor}" fill="${fill}"${transform}>${esc(content)}</text>`
    );
  }

  toString(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

function fmt(value: number): string {
  return Number(value.toFixed(2)).toString();
}

export interface Frame {
  svg: Svg;
  x: Scale;
  y: Scale;
}

/** Standard plot frame: axes, ticks, labels, title, config-digest footer. */
export function frame(options: {
  title: string;
  xLabel: string;
  yLabel: string;
  xDomain: [number, number];
  yDomain: [number, number];
  footer: string;
  width?: number;
  height?: number;
}): Frame {
  const { margin } = theme;
  const width = options.width ?? theme.width;
  const height = options.height ?? theme.height;
  const svg = new Svg(width, height);
  const x = linearScale(options.xDomain, [margin.left, width - margin.right]);
  const y = linearScale(options.yDomain, [height - margin.bottom, margin.top]);

  for (const tick of niceTicks(options.xDomain[0], options.xDomain[1])) {
    const px = x(tick);
    svg.line(px, y.range[0], px, y.range[1], theme.grid, 0.5);
    svg.text(px, y.range[0] + 18, shortNumber(tick), { anchor: "middle" });
  }
  for (const tick of niceTicks(options.yDomain[0], options.yDomain[1])) {
    const py = y(tick);
    svg.line(x.range[0], py, x.range[1], py, theme.grid, 0.5);
    svg.text(x.range[0] - 8, py + 4, shortNumber(tick), { anchor: "end" });
  }
  svg.line(x.range[0], y.range[0], x.range[1], y.range[0], theme.axis, 1.2);
  svg.line(x.range[0], y.range[0], x.range[0], y.range[1], theme.axis, 1.2);
  svg.text((x.range[0] + x.range[1]) / 2, height - 14, options.xLabel, { anchor: "middle" });
  svg.text(16, (y.range[0] + y.range[1]) / 2, options.yLabel, {
    anchor: "middle",
    rotate: -90,
  });
  svg.text(width / 2, 24, options.title, { anchor: "middle", size: theme.titleSize });
  svg.text(width - 6, height - 4, options.footer, {
    anchor: "end",
    size: theme.footerSize,
    fill: "#888888",
  });
  return { svg, x, y };
}

export function shortNumber(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1000 || abs < 0.01) return value.toExponential(1);
  return Number(value.toPrecision(4)).toString();
}

export function heatColor(fraction: number): string {
  const clamp = Math.max(0, Math.min(1, fraction));
  const mix = (a: number, b: number) => Math.round(a + (b - a) * clamp);
  const low = [0xf7, 0xfb, 0xff];
  const high = [0x08, 0x30, 0x6b];
  const [r, g, b] = [0, 1, 2].map((i) => mix(low[i], high[i]));
  return `rgb(${r},${g},${b})`;
}
