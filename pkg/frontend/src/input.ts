// Input capture: polls a device source at or above the engine sample rate,
// stamps capture time, and hands normalized-ish axis pairs to a sink. The
// engine owns real normalization; this layer only picks the device and maps
// keyboard arrows onto the four cardinal unit vectors.

export interface AxisSample {
  t: number; // seconds, capture-source clock
  ux: number;
  uy: number;
}

/** Reads the current device state; null means the device is gone. */
export type DeviceSource = () => { ux: number; uy: number } | null;

export interface CaptureOptions {
  rateHz?: number; // emission rate, >= the engine's sample rate
  now?: () => number; // seconds; injectable for tests
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

/**
 * Fixed-rate sampler over an arbitrary device source.
 *
 * Polls faster than it emits so a slow frame cannot starve the engine; the
 * engine holds the last command between samples anyway. When the device
 * disappears a single zero-command failsafe is emitted and capture pauses
 * until the device returns.
 */
export class InputCapture {
  readonly rateHz: number;
  private readonly period: number;
  private readonly now: () => number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;
  private handle: unknown = null;
  private nextDue = 0;
  private deviceLost = false;
  emitted = 0;
  onDeviceLost: () => void = () => {};

  constructor(
    private readonly source: DeviceSource,
    private readonly sink: (s: AxisSample) => void,
    opts: CaptureOptions = {},
  ) {
    this.rateHz = opts.rateHz ?? 60;
    this.period = 1.0 / this.rateHz;
    this.now = opts.now ?? (() => performance.now() / 1000.0);
    this.schedule = opts.schedule ?? ((fn, ms) => setInterval(fn, ms));
    this.cancel = opts.cancel ?? ((h) => clearInterval(h as number));
  }

  start(): void {
    this.nextDue = this.now();
    // poll at twice the emission rate; emit on the fixed-period grid
    this.handle = this.schedule(() => this.poll(), (1000.0 / this.rateHz) / 2.0);
  }

  stop(): void {
    if (this.handle !== null) {
      this.cancel(this.handle);
      this.handle = null;
    }
  }

  private poll(): void {
    const t = this.now();
    if (t < this.nextDue) return;
    const reading = this.source();
    if (reading === null) {
      if (!this.deviceLost) {
        this.deviceLost = true;
        this.sink({ t, ux: 0, uy: 0 }); // zero-command failsafe, sent once
        this.onDeviceLost();
      }
      this.nextDue = t + this.period;
      return;
    }
    this.deviceLost = false;
    // catch up without bursting more than a few samples after a stall
    let emittedThisPoll = 0;
    while (t >= this.nextDue && emittedThisPoll < 4) {
      this.sink({ t, ux: reading.ux, uy: reading.uy });
      this.emitted += 1;
      emittedThisPoll += 1;
      this.nextDue += this.period;
    }
    if (t >= this.nextDue) {
      this.nextDue = t + this.period; // drop the remainder of a long stall
    }
  }
}

const KEY_VECTORS: Record<string, [number, number]> = {
  ArrowUp: [0, 1],
  ArrowDown: [0, -1],
  ArrowLeft: [-1, 0],
  ArrowRight: [1, 0],
};

/** Keyboard fallback: arrow keys act as the four cardinal unit vectors. */
export class KeyboardSource {
  private pressed = new Set<string>();

  keyDown(key: string): void {
    if (key in KEY_VECTORS) this.pressed.add(key);
  }

  keyUp(key: string): void {
    this.pressed.delete(key);
  }

  read(): { ux: number; uy: number } {
    let ux = 0;
    let uy = 0;
    for (const key of this.pressed) {
      const [x, y] = KEY_VECTORS[key];
      ux += x;
      uy += y;
    }
    const mag = Math.hypot(ux, uy);
    if (mag > 1) {
      ux /= mag;
      uy /= mag;
    }
    return { ux, uy };
  }
}

/**
 * Axis-convention handshake: devices disagree on stick polarity, so the
 * session starts with a "push forward" screen and records the sign that
 * makes forward positive. Applied to every subsequent gamepad reading.
 */
export class AxisConvention {
  uxSign = 1;
  uySign = 1;
  calibrated = false;

  observeForwardPush(ux: number, uy: number): boolean {
    if (Math.hypot(ux, uy) < 0.6) return false; // need a deliberate push
    this.uySign = uy >= 0 ? 1 : -1;
    this.uxSign = 1; // turn polarity is a user preference, not detectable here
    this.calibrated = true;
    return true;
  }

  apply(ux: number, uy: number): { ux: number; uy: number } {
    return { ux: this.uxSign * ux, uy: this.uySign * uy };
  }
}

/** Browser gamepad source over navigator.getGamepads(), axes 0/1. */
export function gamepadSource(convention: AxisConvention): DeviceSource {
  return () => {
    const pads = navigator.getGamepads ? navigator.getGamepads() : [];
    for (const pad of pads) {
      if (pad && pad.connected) {
        // stick up is conventionally negative; convention fixes polarity
        return convention.apply(pad.axes[0] ?? 0, -(pad.axes[1] ?? 0));
      }
    }
    return null;
  };
}
