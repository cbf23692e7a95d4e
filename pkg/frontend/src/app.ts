// Admin app wiring: connect, configure, run tasks on a canvas, show results.
// All scoring comes from engine messages; this file only routes them.

import { AxisConvention, InputCapture, KeyboardSource, gamepadSource } from "./input";
import {
  PoseMessage,
  PromptFeedback,
  PromptShow,
  ServerMessage,
  SummaryMessage,
  VisibleGeometry,
} from "./protocol";
import { CommandTaskRenderer } from "./render/command";
import { TrajectoryTaskRenderer } from "./render/trajectory";
import { MEASURE_LABELS, plotPolyline, summaryRows, trendPoints } from "./results";
import { SessionSocket } from "./socket";

type Screen = "connect" | "menu" | "command" | "trajectory" | "summary";

export class App {
  readonly socket = new SessionSocket();
  private screen: Screen = "connect";
  private commandRenderer: CommandTaskRenderer | null = null;
  private trajectoryRenderer: TrajectoryTaskRenderer | null = null;
  private capture: InputCapture | null = null;
  private keyboard = new KeyboardSource();
  private convention = new AxisConvention();
  private summaries: SummaryMessage[] = [];

  constructor(private readonly root: HTMLElement) {
    this.socket.onmessage = (msg) => this.dispatch(msg);
    this.socket.onclose = () => this.note("connection closed");
  }

  start(): void {
    this.renderConnect();
  }

  private note(text: string): void {
    const bar = this.root.querySelector("#status");
    if (bar) bar.textContent = text;
  }

  private dispatch(msg: ServerMessage): void {
    switch (msg.type) {
      case "config_ack":
        if (this.screen === "connect") this.renderMenu();
        break;
      case "prompt_show":
        if (this.screen !== "command") this.renderCommandTask();
        this.commandRenderer?.showPrompt(msg as PromptShow);
        this.commandRenderer?.draw();
        break;
      case "prompt_feedback":
        this.commandRenderer?.showFeedback(msg as PromptFeedback);
        this.commandRenderer?.draw();
        break;
      case "pose":
        if (this.screen !== "trajectory") this.renderTrajectoryTask();
        this.trajectoryRenderer?.showPose(msg as PoseMessage);
        this.trajectoryRenderer?.draw();
        break;
      case "visible_geometry":
        this.trajectoryRenderer?.showGeometry(msg as VisibleGeometry);
        break;
      case "summary":
        this.summaries.push(msg as SummaryMessage);
        this.renderSummary(msg as SummaryMessage);
        break;
      case "error":
        this.note(`engine: ${(msg as { code?: string }).code ?? "error"}`);
        break;
      default:
        break;
    }
  }

  // ---- screens -------------------------------------------------------------

  private shell(title: string, body: string): void {
    this.root.innerHTML = `
      <header><h1>skillbench</h1><span id="status"></span></header>
      <main><h2>${title}</h2>${body}</main>`;
  }

  private renderConnect(): void {
    this.screen = "connect";
    this.shell(
      "Connect",
      `<label>Engine <input id="url" value="ws://127.0.0.1:8765"></label>
       <label>User <input id="user" value="patient-1"></label>
       <button id="go">Connect</button>`,
    );
    this.root.querySelector("#go")?.addEventListener("click", () => {
      const url = (this.root.querySelector("#url") as HTMLInputElement).value;
      const user = (this.root.querySelector("#user") as HTMLInputElement).value;
      this.socket.connect(url);
      const ws = this.socket as unknown as { ws: WebSocket };
      ws.ws.onopen = () => this.socket.hello(user);
    });
  }

  private renderMenu(): void {
    this.screen = "menu";
    this.shell(
      "Tasks",
      `<button id="cmd">Command following</button>
       <button id="traj">Trajectory following</button>
       <p>Calibration: push the stick forward once before starting.</p>`,
    );
    this.root.querySelector("#cmd")?.addEventListener("click", () => {
      this.socket.startTrial(null); // engine defaults: command following
      this.startCapture();
    });
    this.root.querySelector("#traj")?.addEventListener("click", () => {
      this.socket.startTrial({ version: 1, task: "trajectory_following" });
      this.startCapture();
    });
  }

  private canvas(): { ctx: CanvasRenderingContext2D; w: number; h: number } {
    const el = this.root.querySelector("canvas") as HTMLCanvasElement;
    return { ctx: el.getContext("2d")!, w: el.width, h: el.height };
  }

  private renderCommandTask(): void {
    this.screen = "command";
    this.shell("Match the white arrow", `<canvas width="640" height="480"></canvas>`);
    const { ctx, w, h } = this.canvas();
    this.commandRenderer = new CommandTaskRenderer(ctx, w, h);
    this.commandRenderer.draw();
  }

  private renderTrajectoryTask(): void {
    this.screen = "trajectory";
    this.shell("Stay inside the path", `<canvas width="640" height="480"></canvas>`);
    const { ctx, w, h } = this.canvas();
    this.trajectoryRenderer = new TrajectoryTaskRenderer(ctx, w, h);
    this.trajectoryRenderer.draw();
  }

  private renderSummary(msg: SummaryMessage): void {
    this.screen = "summary";
    const rows = summaryRows(msg.report)
      .map((r) => `<tr><td>${r.label}</td><td>${r.display}</td></tr>`)
      .join("");
    this.shell(
      "Results",
      `<table>${rows}</table>
       <canvas id="trend" width="480" height="200"></canvas>
       <button id="again">Back to tasks</button>`,
    );
    this.drawTrend(msg);
    this.root.querySelector("#again")?.addEventListener("click", () => this.renderMenu());
  }

  private drawTrend(latest: SummaryMessage): void {
    const measure = latest.report.task === "command_following" ? "t_d" : "t_ob";
    const values = this.summaries
      .filter((s) => s.report.task === latest.report.task)
      .map((s) => s.report[measure]);
    const pts = plotPolyline(trendPoints(values), 480, 200);
    const el = this.root.querySelector("#trend") as HTMLCanvasElement | null;
    if (!el || pts.length === 0) return;
    const ctx = el.getContext("2d")!;
    ctx.clearRect(0, 0, 480, 200);
    ctx.strokeStyle = "#3a7bd5";
    ctx.beginPath();
    pts.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
    ctx.fillStyle = "#333";
    ctx.font = "12px sans-serif";
    ctx.fillText(`${MEASURE_LABELS[measure]} over trials`, 10, 14);
  }

  // ---- input ---------------------------------------------------------------

  private startCapture(): void {
    if (this.capture) return;
    window.addEventListener("keydown", (e) => this.keyboard.keyDown(e.key));
    window.addEventListener("keyup", (e) => this.keyboard.keyUp(e.key));
    const pads = gamepadSource(this.convention);
    const source = () => pads() ?? this.keyboard.read(); // keyboard fallback
    this.capture = new InputCapture(
      source,
      (s) => this.socket.sendInput(s.t, s.ux, s.uy),
      { rateHz: 60 },
    );
    this.capture.onDeviceLost = () => this.note("input device lost");
    this.capture.start();
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (root) new App(root).start();
}
