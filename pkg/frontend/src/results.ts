// Results screens are display-only: every number shown comes verbatim from a
// summary message or a stored series; the UI never recomputes a measure.

import { MEASURE_NAMES, MeasureName, SummaryReport } from "./protocol";

export const MEASURE_LABELS: Record<MeasureName, string> = {
  t_d: "Average response delay [s]",
  r_p: "Successful response [%]",
  t_s: "Average settling time [s]",
  a_r: "Initial response accuracy",
  a_s: "Average settled accuracy",
  s: "Stability (dimensionless jerk)",
  v_avg: "Average speed [m/s]",
  t_ob: "Time out of bounds [%]",
};

export interface SummaryRow {
  measure: MeasureName;
  label: string;
  display: string;
  value: number | null;
}

/** Absent measures render as "not defined", never as 0. */
export function formatMeasure(measure: MeasureName, value: number | null): string {
  if (value === null || value === undefined) return "not defined";
  if (measure === "r_p" || measure === "t_ob") return `${formatNumber(value)}%`;
  return formatNumber(value);
}

function formatNumber(v: number): string {
  if (Number.isInteger(v)) return String(v);
  const abs = Math.abs(v);
  if (abs !== 0 && (abs >= 1e6 || abs < 1e-3)) return v.toExponential(4);
  return String(Math.round(v * 1e6) / 1e6);
}

export function summaryRows(report: SummaryReport): SummaryRow[] {
  const relevant: MeasureName[] =
    report.task === "command_following"
      ? ["t_d", "r_p", "t_s", "a_r", "a_s"]
      : ["s", "v_avg", "t_ob"];
  return relevant.map((measure) => ({
    measure,
    label: MEASURE_LABELS[measure],
    display: formatMeasure(measure, report[measure]),
    value: report[measure],
  }));
}

export interface TrendPoint {
  x: number; // trial index, 1-based
  y: number;
}

/** Points for the per-measure trend plot across a user's trials. */
export function trendPoints(values: (number | null)[]): TrendPoint[] {
  const pts: TrendPoint[] = [];
  values.forEach((v, i) => {
    if (v !== null && v !== undefined) pts.push({ x: i + 1, y: v });
  });
  return pts;
}

/** Maps trend points into pixel space for a simple polyline plot. */
export function plotPolyline(
  pts: TrendPoint[],
  width: number,
  height: number,
  pad = 24,
): [number, number][] {
  if (pts.length === 0) return [];
  const xs = pts.map((p) => p.x);
  const ys = pts.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  return pts.map((p) => [
    pad + ((p.x - xMin) / xSpan) * (width - 2 * pad),
    height - pad - ((p.y - yMin) / ySpan) * (height - 2 * pad),
  ]);
}

export { MEASURE_NAMES };
