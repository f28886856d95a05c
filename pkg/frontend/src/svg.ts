import { fmt, type Scale } from "./scale.js";

/** Minimal deterministic SVG builder: fixed attribute order, no timestamps. */
export class SvgDoc {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  add(tag: string, attrs: Record<string, string | number>, text?: string): void {
    const rendered = Object.entries(attrs)
      .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : v}"`)
      .join(" ");
    if (text === undefined) {
      this.parts.push(`<${tag} ${rendered}/>`);
    } else {
      this.parts.push(`<${tag} ${rendered}>${escapeText(text)}</${tag}>`);
    }
  }

  comment(text: string): void {
    this.parts.push(`<!-- ${text} -->`);
  }

  toString(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
        `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect x="0" y="0" width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      "</svg>",
      "",
    ].join("\n");
  }
}

function escapeText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function polylinePoints(xs: number[], ys: number[]): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (Number.isFinite(xs[i]) && Number.isFinite(ys[i])) {
      pts.push(`${fmt(xs[i])},${fmt(ys[i])}`);
    }
  }
  return pts.join(" ");
}

export interface Frame {
  doc: SvgDoc;
  x: Scale;
  y: Scale;
  plot: { left: number; right: number; top: number; bottom: number };
}

/** Axes, tick marks and labels around the plot area. */
export function drawAxes(frame: Frame, xLabel: string, yLabel: string): void {
  const { doc, x, y, plot } = frame;
  doc.add("line", {
    x1: plot.left, y1: plot.bottom, x2: plot.right, y2: plot.bottom,
    stroke: "black", "stroke-width": 1,
  });
  doc.add("line", {
    x1: plot.left, y1: plot.top, x2: plot.left, y2: plot.bottom,
    stroke: "black", "stroke-width": 1,
  });
  for (const t of x.ticks()) {
    const px = x.map(t);
    doc.add("line", { x1: px, y1: plot.bottom, x2: px, y2: plot.bottom + 4, stroke: "black" });
    doc.add("text", {
      x: px, y: plot.bottom + 16, "text-anchor": "middle", "font-size": 10,
      "font-family": "sans-serif",
    }, tickLabel(t));
  }
  for (const t of y.ticks()) {
    const py = y.map(t);
    doc.add("line", { x1: plot.left - 4, y1: py, x2: plot.left, y2: py, stroke: "black" });
    doc.add("text", {
      x: plot.left - 6, y: py + 3, "text-anchor": "end", "font-size": 10,
      "font-family": "sans-serif",
    }, tickLabel(t));
  }
  doc.add("text", {
    x: (plot.left + plot.right) / 2, y: plot.bottom + 32, "text-anchor": "middle",
    "font-size": 12, "font-family": "sans-serif",
  }, xLabel);
  doc.add("text", {
    x: 14, y: (plot.top + plot.bottom) / 2, "text-anchor": "middle",
    "font-size": 12, "font-family": "sans-serif",
    transform: `rotate(-90 14 ${fmt((plot.top + plot.bottom) / 2)})`,
  }, yLabel);
}

function tickLabel(t: number): string {
  if (t !== 0 && (Math.abs(t) >= 1e4 || Math.abs(t) < 1e-3)) {
    const e = Math.round(Math.log10(Math.abs(t)));
    const mant = t / Math.pow(10, e);
    return Math.abs(mant - 1) < 1e-9 ? `1e${e}` : `${fmt(mant)}e${e}`;
  }
  return fmt(t);
}
