import { readFileSync, writeFileSync } from "node:fs";
import { column, readCsv, type Table } from "./csv.js";
import { linearScale, logScale, fmt } from "./scale.js";
import { SvgDoc, drawAxes, polylinePoints, type Frame } from "./svg.js";

export type FigureKind = "profile" | "decay" | "annuli_trace";

export interface FigureSpec {
  kind: FigureKind;
  /** main CSV path (profile, decay series or probe trace) */
  input: string;
  /** verification report JSON, required for annuli_trace */
  report?: string;
  output: string;
  /** reference slopes overlaid behind decay data (default [-0.5]) */
  referenceSlopes?: number[];
  /** also overlay the log-corrected reference (1 + log t)/sqrt(t) */
  logCorrection?: boolean;
  title?: string;
}

const WIDTH = 640;
const HEIGHT = 440;
const PLOT = { left: 64, right: WIDTH - 24, top: 28, bottom: HEIGHT - 52 };

function makeFrame(x: Frame["x"], y: Frame["y"]): Frame {
  return { doc: new SvgDoc(WIDTH, HEIGHT), x, y, plot: PLOT };
}

function pad(lo: number, hi: number, frac = 0.05): [number, number] {
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - frac * span, hi + frac * span];
}

function padLog(lo: number, hi: number, factor = 1.3): [number, number] {
  return [lo / factor, hi * factor];
}

/** Reference curve value(t) = anchor * (t/t_anchor)^slope through the last point. */
export function referenceCurve(
  times: number[], values: number[], slope: number,
): { t: number[]; v: number[] } {
  const tA = times[times.length - 1];
  const vA = values[values.length - 1];
  return { t: [...times], v: times.map((t) => vA * Math.pow(t / tA, slope)) };
}

/** Log-corrected reference (1 + log t)/sqrt(t), anchored at the last point. */
export function logCorrectedCurve(
  times: number[], values: number[],
): { t: number[]; v: number[] } {
  const tA = times[times.length - 1];
  const vA = values[values.length - 1];
  const base = (t: number) => (1 + Math.log(t)) / Math.sqrt(t);
  return { t: [...times], v: times.map((t) => (vA * base(t)) / base(tA)) };
}

export function renderDecay(spec: FigureSpec): string {
  const table = readCsv(spec.input, ["t", "value"]);
  const times = column(table, "t");
  const values = column(table, "value");
  const positive = times
    .map((t, i) => [t, values[i]] as const)
    .filter(([t, v]) => t > 0 && v > 0);
  if (positive.length < 2) {
    throw new Error(`decay figure needs at least two positive samples in ${spec.input}`);
  }
  const ts = positive.map(([t]) => t);
  const vs = positive.map(([, v]) => v);
  const slopes = spec.referenceSlopes ?? [-0.5];

  const refs = slopes.map((s) => ({ slope: s, curve: referenceCurve(ts, vs, s) }));
  const logRef = spec.logCorrection ? logCorrectedCurve(ts, vs) : undefined;
  const allV = [
    ...vs,
    ...refs.flatMap((r) => r.curve.v),
    ...(logRef ? logRef.v : []),
  ];
  const x = logScale(padLog(Math.min(...ts), Math.max(...ts)), [PLOT.left, PLOT.right]);
  const y = logScale(padLog(Math.min(...allV), Math.max(...allV)), [PLOT.bottom, PLOT.top]);
  const frame = makeFrame(x, y);
  const { doc } = frame;

  // references are drawn first so the data sits on top of them
  for (const { slope, curve } of refs) {
    doc.add("polyline", {
      class: "reference-slope",
      "data-slope": String(slope),
      points: polylinePoints(curve.t.map(x.map), curve.v.map(y.map)),
      fill: "none", stroke: "#888888", "stroke-dasharray": "6 3", "stroke-width": 1,
    });
  }
  if (logRef) {
    doc.add("polyline", {
      class: "log-correction",
      points: polylinePoints(logRef.t.map(x.map), logRef.v.map(y.map)),
      fill: "none", stroke: "#bb7722", "stroke-dasharray": "2 3", "stroke-width": 1,
    });
  }
  doc.add("polyline", {
    class: "series",
    points: polylinePoints(ts.map(x.map), vs.map(y.map)),
    fill: "none", stroke: "#1f5fbf", "stroke-width": 1.5,
  });
  for (let i = 0; i < ts.length; i++) {
    doc.add("circle", {
      class: "sample", cx: x.map(ts[i]), cy: y.map(vs[i]), r: 2.5, fill: "#1f5fbf",
    });
  }
  drawAxes(frame, "t", "value");
  if (spec.title) {
    doc.add("text", {
      x: WIDTH / 2, y: 18, "text-anchor": "middle", "font-size": 13,
      "font-family": "sans-serif",
    }, spec.title);
  }
  return doc.toString();
}

export function renderProfile(spec: FigureSpec): string {
  const table = readCsv(spec.input, ["r", "phi", "lower_bound"]);
  const r = column(table, "r");
  const phi = column(table, "phi");
  const lower = column(table, "lower_bound");
  const x = linearScale(pad(Math.min(...r), Math.max(...r), 0.02), [PLOT.left, PLOT.right]);
  const yLo = Math.min(0, ...lower.filter(Number.isFinite));
  const y = linearScale(pad(Math.max(yLo, -0.1), 1.05, 0.02), [PLOT.bottom, PLOT.top]);
  const frame = makeFrame(x, y);
  const { doc } = frame;

  doc.add("line", {
    class: "upper-bound",
    x1: PLOT.left, y1: y.map(1), x2: PLOT.right, y2: y.map(1),
    stroke: "#888888", "stroke-dasharray": "6 3", "stroke-width": 1,
  });
  const clippedLower = lower.map((v) => Math.max(v, y.domain[0]));
  doc.add("polyline", {
    class: "lower-bound",
    points: polylinePoints(r.map(x.map), clippedLower.map(y.map)),
    fill: "none", stroke: "#888888", "stroke-dasharray": "6 3", "stroke-width": 1,
  });
  doc.add("polyline", {
    class: "series",
    points: polylinePoints(r.map(x.map), phi.map(y.map)),
    fill: "none", stroke: "#1f5fbf", "stroke-width": 1.5,
  });
  drawAxes(frame, "r", "phi");
  if (spec.title) {
    doc.add("text", {
      x: WIDTH / 2, y: 18, "text-anchor": "middle", "font-size": 13,
      "font-family": "sans-serif",
    }, spec.title);
  }
  return doc.toString();
}

interface CrossingRecord {
  n: number;
  level: number;
  interval: [number, number];
  crossing_time: number | null;
  found: boolean;
}

export function renderAnnuliTrace(spec: FigureSpec): string {
  if (!spec.report) {
    throw new Error("annuli_trace figure needs the verification report JSON");
  }
  const table = readCsv(spec.input, ["t", "value"]);
  const times = column(table, "t");
  const values = column(table, "value");
  const report = readReport(spec.report);
  const crossings = (report.crossings ?? []) as CrossingRecord[];
  const levels = crossings.map((c) => c.level);

  const positive = times.map((t, i) => [t, values[i]] as const).filter(([t]) => t > 0);
  const ts = positive.map(([t]) => t);
  const vs = positive.map(([, v]) => v);
  const x = logScale(padLog(Math.min(...ts), Math.max(...ts)), [PLOT.left, PLOT.right]);
  const vMax = Math.max(...vs, ...levels) * 1.15;
  const y = linearScale([0, vMax], [PLOT.bottom, PLOT.top]);
  const frame = makeFrame(x, y);
  const { doc } = frame;

  for (const c of crossings) {
    doc.add("line", {
      class: "target-level",
      "data-level": fmt(c.level),
      x1: PLOT.left, y1: y.map(c.level), x2: PLOT.right, y2: y.map(c.level),
      stroke: "#888888", "stroke-dasharray": "6 3", "stroke-width": 1,
    });
  }
  doc.add("polyline", {
    class: "trace",
    points: polylinePoints(ts.map(x.map), vs.map(y.map)),
    fill: "none", stroke: "#1f5fbf", "stroke-width": 1.5,
  });
  for (const c of crossings) {
    if (c.found && c.crossing_time !== null) {
      doc.add("circle", {
        class: "crossing", cx: x.map(c.crossing_time), cy: y.map(c.level), r: 4,
        fill: "none", stroke: "#c43333", "stroke-width": 1.5,
      });
    }
  }
  drawAxes(frame, "t", "u at probe");
  if (spec.title) {
    doc.add("text", {
      x: WIDTH / 2, y: 18, "text-anchor": "middle", "font-size": 13,
      "font-family": "sans-serif",
    }, spec.title);
  }
  return doc.toString();
}

function readReport(path: string): { crossings?: CrossingRecord[] } {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new Error(`cannot read report JSON: ${path}`);
  }
  try {
    return JSON.parse(text);
  } catch {
    throw new Error(`invalid JSON in ${path}`);
  }
}

export function render(spec: FigureSpec): string {
  let svg: string;
  if (spec.kind === "decay") {
    svg = renderDecay(spec);
  } else if (spec.kind === "profile") {
    svg = renderProfile(spec);
  } else if (spec.kind === "annuli_trace") {
    svg = renderAnnuliTrace(spec);
  } else {
    throw new Error(`unknown figure kind: ${(spec as FigureSpec).kind}`);
  }
  writeFileSync(spec.output, svg);
  return svg;
}
