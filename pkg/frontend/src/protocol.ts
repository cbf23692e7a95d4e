// Wire protocol spoken with the assessment engine. Every message carries
// {type, session_id, seq}; seq is strictly increasing per direction.

export interface BaseMessage {
  type: string;
  session_id: string | null;
  seq: number;
}

export interface PromptShow extends BaseMessage {
  type: "prompt_show";
  m: number;
  theta_hat: number;
  mag_hat: number | null;
  duration: number;
  onset: number;
  deadline: number;
}

export interface PromptFeedback extends BaseMessage {
  type: "prompt_feedback";
  ux: number;
  uy: number;
}

export interface PoseMessage extends BaseMessage {
  type: "pose";
  t: number;
  x: number;
  y: number;
  heading: number;
}

export interface GeometryFragment {
  kind: "line" | "arc" | "spin";
  segment_id: number;
  length: number;
  p0?: [number, number];
  p1?: [number, number];
  center?: [number, number];
  radius?: number;
  phi0?: number;
  dphi?: number;
  at?: [number, number];
}

export interface VisibleGeometry extends BaseMessage {
  type: "visible_geometry";
  fragments: GeometryFragment[];
}

export interface SummaryReport {
  task: string;
  t_d: number | null;
  r_p: number | null;
  t_s: number | null;
  a_r: number | null;
  a_s: number | null;
  s: number | null;
  v_avg: number | null;
  t_ob: number | null;
  prompt_count: number;
  responded_count: number;
  settled_count: number;
  per_prompt: Record<string, unknown>[];
  per_segment: Record<string, unknown>[];
}

export interface SummaryMessage extends BaseMessage {
  type: "summary";
  trial_id: number | null;
  report: SummaryReport;
}

export interface ErrorMessage extends BaseMessage {
  type: "error";
  code: string;
  detail: string;
}

export type ServerMessage =
  | PromptShow
  | PromptFeedback
  | PoseMessage
  | VisibleGeometry
  | SummaryMessage
  | ErrorMessage
  | (BaseMessage & { type: "config_ack" | "partial_score"; [key: string]: unknown });

export const MEASURE_NAMES = [
  "t_d",
  "r_p",
  "t_s",
  "a_r",
  "a_s",
  "s",
  "v_avg",
  "t_ob",
] as const;

export type MeasureName = (typeof MEASURE_NAMES)[number];

/** Tracks inbound seq; the engine guarantees strict increase per direction. */
export class SequenceGuard {
  private last = 0;

  accept(msg: BaseMessage): boolean {
    if (!Number.isInteger(msg.seq) || msg.seq <= this.last) {
      return false;
    }
    this.last = msg.seq;
    return true;
  }
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const msg = obj as Record<string, unknown>;
  if (typeof msg.type !== "string" || typeof msg.seq !== "number") return null;
  return msg as unknown as ServerMessage;
}

/**
 * Recorder for the session's message traffic. The log is replayable through
 * the engine, which must reproduce the same outbound messages; the UI never
 * derives scores from anything outside this log.
 */
export class MessageLog {
  readonly inbound: ServerMessage[] = [];
  readonly outbound: Record<string, unknown>[] = [];

  noteInbound(msg: ServerMessage): void {
    this.inbound.push(msg);
  }

  noteOutbound(msg: Record<string, unknown>): void {
    this.outbound.push(msg);
  }

  toJSON(): string {
    return JSON.stringify({ inbound: this.inbound, outbound: this.outbound });
  }
}
