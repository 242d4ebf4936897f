/** Client-side state: the latest snapshot, connection status, drag
 * state, and the operator-effort gauge. Everything the renderer needs
 * lives here; message handling mutates only this object. */

import {
  AckPayload,
  Envelope,
  ErrorPayload,
  HelloPayload,
  PROTOCOL_VERSION,
  StateSnapshot,
  forceMagnitude,
} from "./protocol.js";

export const GRAVITY = 9.81;

export type ConnectionStatus =
  | "idle"
  | "connecting"
  | "connected"
  | "disconnected";

export interface DragState {
  startPx: [number, number];
  currentPx: [number, number];
  force: { fx: number; fz: number };
  clamped: boolean;
}

/** Running mean/max of |w_ext| over payload weight, plus a bounded
 * recent-history ring for the sparkline. */
export class EffortGauge {
  readonly capacity: number;
  readonly history: number[] = [];
  count = 0;
  maxRatio = 0;
  private sum = 0;

  constructor(capacity = 600) {
    if (capacity < 1) throw new Error("gauge capacity must be positive");
    this.capacity = capacity;
  }

  push(ratio: number): void {
    this.count += 1;
    this.sum += ratio;
    if (ratio > this.maxRatio) this.maxRatio = ratio;
    this.history.push(ratio);
    if (this.history.length > this.capacity) this.history.shift();
  }

  get meanRatio(): number {
    return this.count === 0 ? 0 : this.sum / this.count;
  }

  get latest(): number {
    return this.history.length === 0 ? 0 : this.history[this.history.length - 1];
  }

  reset(): void {
    this.history.length = 0;
    this.count = 0;
    this.sum = 0;
    this.maxRatio = 0;
  }
}

export class ViewModel {
  status: ConnectionStatus = "idle";
  hello: HelloPayload | null = null;
  snapshot: StateSnapshot | null = null;
  drag: DragState | null = null;
  gauge = new EffortGauge();
  lastAck: AckPayload | null = null;
  lastError: string | null = null;
  private clampWarningUntil = -Infinity;
  private lastStateAt = -Infinity;
  private readonly now: () => number;

  constructor(now: () => number = () => Date.now()) {
    this.now = now;
  }

  handleMessage(raw: unknown): void {
    const msg = raw as Envelope | null;
    if (
      msg === null ||
      typeof msg !== "object" ||
      msg.v !== PROTOCOL_VERSION ||
      typeof msg.type !== "string"
    ) {
      this.lastError = "unrecognized server message";
      return;
    }
    switch (msg.type) {
      case "hello":
        this.hello = msg.payload as HelloPayload;
        this.status = "connected";
        this.gauge.reset();
        break;
      case "state": {
        const snap = msg.payload as StateSnapshot;
        this.snapshot = snap;
        this.lastStateAt = this.now();
        const weight = this.payloadWeight;
        // Frozen frames (paused or finished) repeat the same wrench;
        // folding them in would bias the session statistics.
        if (weight !== null && !snap.paused && !snap.done) {
          this.gauge.push(forceMagnitude(snap.w_ext_estimate) / weight);
        }
        break;
      }
      case "ack": {
        const ack = msg.payload as AckPayload;
        this.lastAck = ack;
        if (ack.clamped) this.flagClamp();
        break;
      }
      case "error":
        this.lastError = (msg.payload as ErrorPayload).message;
        break;
      default:
        this.lastError = `unknown message type ${msg.type}`;
    }
  }

  get payloadWeight(): number | null {
    return this.hello === null
      ? null
      : this.hello.scenario.payload_mass * GRAVITY;
  }

  /** True while connected but without a fresh snapshot. */
  isStale(staleAfterMs = 400): boolean {
    return (
      this.status === "connected" &&
      this.snapshot !== null &&
      this.now() - this.lastStateAt > staleAfterMs
    );
  }

  flagClamp(durationMs = 1500): void {
    this.clampWarningUntil = this.now() + durationMs;
  }

  get clampWarning(): boolean {
    return this.now() < this.clampWarningUntil || this.drag?.clamped === true;
  }
}
