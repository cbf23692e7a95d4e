// Pure geometry for the command-task arrows; renderers draw what this emits.

export interface ArrowShape {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  headLeft: [number, number];
  headRight: [number, number];
}

/**
 * Arrow from the screen center along a command direction. Screen y grows
 * downward, so the world angle is negated. Length is proportional to the
 * command magnitude (target arrows use mag_hat, 1.0 when magnitudes are off).
 */
export function arrowShape(
  cx: number,
  cy: number,
  theta: number,
  magnitude: number,
  maxLen: number,
): ArrowShape {
  const len = Math.max(0, Math.min(1, magnitude)) * maxLen;
  const dx = Math.cos(theta);
  const dy = -Math.sin(theta);
  const x1 = cx + len * dx;
  const y1 = cy + len * dy;
  const head = Math.min(14, len * 0.25);
  const forward = Math.atan2(y1 - cy, x1 - cx);
  const wing = 0.45; // radians off the reverse direction
  const backAngle = forward + Math.PI;
  return {
    x0: cx,
    y0: cy,
    x1,
    y1,
    headLeft: [x1 + head * Math.cos(backAngle - wing), y1 + head * Math.sin(backAngle - wing)],
    headRight: [x1 + head * Math.cos(backAngle + wing), y1 + head * Math.sin(backAngle + wing)],
  };
}

/** Direction and magnitude of a feedback command; null for the zero vector. */
export function commandPolar(ux: number, uy: number): { theta: number; mag: number } | null {
  const mag = Math.hypot(ux, uy);
  if (mag === 0) return null;
  return { theta: Math.atan2(uy, ux), mag: Math.min(1, mag) };
}
