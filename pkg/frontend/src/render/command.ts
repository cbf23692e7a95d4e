// Command task screen: white target arrow (direction + length from the
// prompt), blue feedback arrow mirroring the user's current command.

import { PromptFeedback, PromptShow } from "../protocol";
import { arrowShape, commandPolar } from "./arrows";
import { DrawSurface } from "./canvas";

export interface CommandScreenState {
  prompt: PromptShow | null;
  feedback: PromptFeedback | null;
}

export class CommandTaskRenderer {
  readonly state: CommandScreenState = { prompt: null, feedback: null };

  constructor(
    private readonly ctx: DrawSurface,
    private readonly width: number,
    private readonly height: number,
  ) {}

  showPrompt(msg: PromptShow): void {
    this.state.prompt = msg;
    this.state.feedback = null;
  }

  showFeedback(msg: PromptFeedback): void {
    this.state.feedback = msg;
  }

  clearPrompt(): void {
    this.state.prompt = null;
  }

  draw(): void {
    const { ctx } = this;
    const cx = this.width / 2;
    const cy = this.height / 2;
    const maxLen = Math.min(this.width, this.height) * 0.4;
    ctx.fillStyle = "#111";
    ctx.fillRect(0, 0, this.width, this.height);

    const prompt = this.state.prompt;
    if (prompt) {
      const mag = prompt.mag_hat ?? 1.0;
      this.drawArrow(arrowShape(cx, cy, prompt.theta_hat, mag, maxLen), "#ffffff", 6);
    }
    const feedback = this.state.feedback;
    if (feedback) {
      const polar = commandPolar(feedback.ux, feedback.uy);
      if (polar) {
        // no blue arrow for a neutral command
        this.drawArrow(arrowShape(cx, cy, polar.theta, polar.mag, maxLen), "#3a7bd5", 4);
      }
    }
  }

  private drawArrow(shape: ReturnType<typeof arrowShape>, color: string, width: number): void {
    const { ctx } = this;
    ctx.strokeStyle = color;
    ctx.lineWidth = width;
    ctx.beginPath();
    ctx.moveTo(shape.x0, shape.y0);
    ctx.lineTo(shape.x1, shape.y1);
    ctx.moveTo(shape.headLeft[0], shape.headLeft[1]);
    ctx.lineTo(shape.x1, shape.y1);
    ctx.lineTo(shape.headRight[0], shape.headRight[1]);
    ctx.stroke();
  }
}
