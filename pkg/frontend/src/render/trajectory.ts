// Trajectory task screen: grey out-of-bounds everywhere, corridor band drawn
// only along the visible fragments the engine sends, pentagon footprint with
// a red front edge, staleness overlay when poses stop arriving.

import { GeometryFragment, PoseMessage, VisibleGeometry } from "../protocol";
import { DrawSurface } from "./canvas";

export interface Camera {
  scale: number; // pixels per meter
  cx: number; // world point at the canvas center
  cy: number;
}

export interface TrajectoryScreenState {
  pose: PoseMessage | null;
  fragments: GeometryFragment[];
  stale: boolean;
  ticksSincePose: number;
}

const STALE_AFTER_TICKS = 3;

export class TrajectoryTaskRenderer {
  readonly state: TrajectoryScreenState = {
    pose: null,
    fragments: [],
    stale: false,
    ticksSincePose: 0,
  };
  corridorHalfWidth = 1.0;
  footprint: [number, number][] = [];

  constructor(
    private readonly ctx: DrawSurface,
    private readonly width: number,
    private readonly height: number,
    private readonly camera: Camera = { scale: 60, cx: 0, cy: 0 },
  ) {}

  showPose(msg: PoseMessage): void {
    this.state.pose = msg;
    this.state.ticksSincePose = 0;
    this.state.stale = false;
    this.camera.cx = msg.x;
    this.camera.cy = msg.y;
  }

  showGeometry(msg: VisibleGeometry): void {
    this.state.fragments = msg.fragments;
  }

  /** Called once per render frame without a fresh pose. */
  tickWithoutPose(): void {
    this.state.ticksSincePose += 1;
    if (this.state.ticksSincePose > STALE_AFTER_TICKS) {
      this.state.stale = true;
    }
  }

  private toScreen(x: number, y: number): [number, number] {
    return [
      this.width / 2 + (x - this.camera.cx) * this.camera.scale,
      this.height / 2 - (y - this.camera.cy) * this.camera.scale,
    ];
  }

  draw(): void {
    const { ctx } = this;
    // everything not proven in-bounds is the out-of-bounds grey
    ctx.fillStyle = "#9a9a9a";
    ctx.fillRect(0, 0, this.width, this.height);

    const band = 2 * this.corridorHalfWidth * this.camera.scale;
    for (const frag of this.state.fragments) {
      ctx.strokeStyle = "#f2f2f2";
      ctx.lineWidth = band;
      this.strokeFragment(frag);
      ctx.strokeStyle = "#3a7bd5";
      ctx.lineWidth = 2;
      this.strokeFragment(frag);
    }

    if (this.state.pose) {
      this.drawFootprint(this.state.pose);
    }
    if (this.state.stale) {
      ctx.fillStyle = "rgba(0,0,0,0.5)";
      ctx.fillRect(0, 0, this.width, 40);
      ctx.fillStyle = "#fff";
      ctx.font = "16px sans-serif";
      ctx.fillText("connection stalled", 12, 26);
    }
  }

  private strokeFragment(frag: GeometryFragment): void {
    const { ctx } = this;
    ctx.beginPath();
    if (frag.kind === "line" && frag.p0 && frag.p1) {
      const [x0, y0] = this.toScreen(frag.p0[0], frag.p0[1]);
      const [x1, y1] = this.toScreen(frag.p1[0], frag.p1[1]);
      ctx.moveTo(x0, y0);
      ctx.lineTo(x1, y1);
    } else if (frag.kind === "arc" && frag.center && frag.radius !== undefined) {
      const [cx, cy] = this.toScreen(frag.center[0], frag.center[1]);
      const r = frag.radius * this.camera.scale;
      const phi0 = frag.phi0 ?? 0;
      const dphi = frag.dphi ?? 0;
      // canvas y is flipped: world CCW becomes canvas clockwise
      ctx.arc(cx, cy, r, -phi0, -(phi0 + dphi), dphi >= 0);
    } else if (frag.kind === "spin" && frag.at) {
      const [x, y] = this.toScreen(frag.at[0], frag.at[1]);
      ctx.arc(x, y, this.corridorHalfWidth * this.camera.scale, 0, 2 * Math.PI);
    }
    ctx.stroke();
  }

  private drawFootprint(pose: PoseMessage): void {
    const { ctx } = this;
    if (this.footprint.length === 0) return;
    const cos = Math.cos(pose.heading);
    const sin = Math.sin(pose.heading);
    const pts = this.footprint.map(([vx, vy]) =>
      this.toScreen(pose.x + cos * vx - sin * vy, pose.y + sin * vx + cos * vy),
    );
    ctx.fillStyle = "#f4c20d";
    ctx.beginPath();
    ctx.moveTo(pts[0][0], pts[0][1]);
    for (const [x, y] of pts.slice(1)) ctx.lineTo(x, y);
    ctx.closePath();
    ctx.fill();
    // red front: the two edges meeting the foremost vertex
    let front = 0;
    for (let i = 1; i < this.footprint.length; i++) {
      if (this.footprint[i][0] > this.footprint[front][0]) front = i;
    }
    const prev = (front + this.footprint.length - 1) % this.footprint.length;
    const next = (front + 1) % this.footprint.length;
    ctx.strokeStyle = "#d84b3a";
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(pts[prev][0], pts[prev][1]);
    ctx.lineTo(pts[front][0], pts[front][1]);
    ctx.lineTo(pts[next][0], pts[next][1]);
    ctx.stroke();
  }
}
