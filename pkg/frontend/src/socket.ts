// Thin WebSocket client for the session protocol: outbound seq numbering,
// inbound seq checking, message-log recording.

import { MessageLog, SequenceGuard, ServerMessage, parseServerMessage } from "./protocol";

export type MessageHandler = (msg: ServerMessage) => void;

export class SessionSocket {
  private ws: WebSocket | null = null;
  private seq = 0;
  private guard = new SequenceGuard();
  readonly log = new MessageLog();
  sessionId: string | null = null;
  onmessage: MessageHandler = () => {};
  onclose: () => void = () => {};

  connect(url: string): void {
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (!msg || !this.guard.accept(msg)) {
        return; // out-of-order or unparseable: drop silently, engine is authoritative
      }
      this.log.noteInbound(msg);
      if (msg.type === "config_ack" && this.sessionId === null) {
        this.sessionId = msg.session_id;
      }
      this.onmessage(msg);
    };
    this.ws.onclose = () => this.onclose();
  }

  send(msg: Record<string, unknown>): void {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return;
    this.seq += 1;
    const full = { ...msg, seq: this.seq, session_id: this.sessionId };
    this.log.noteOutbound(full);
    this.ws.send(JSON.stringify(full));
  }

  hello(user: string): void {
    this.send({ type: "hello", client_time: performance.now() / 1000.0, user });
  }

  startTrial(config: Record<string, unknown> | null): void {
    this.send({ type: "start_trial", config });
  }

  sendInput(t: number, ux: number, uy: number): void {
    this.send({ type: "input", t, ux, uy });
  }

  sendQuestionnaire(instrumentId: string, responses: (number | string)[]): void {
    this.send({ type: "questionnaire_response", instrument_id: instrumentId, responses });
  }

  abort(): void {
    this.send({ type: "abort" });
  }

  close(): void {
    this.ws?.close();
  }
}
