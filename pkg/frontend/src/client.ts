/** Bridge client: socket lifecycle, command construction with
 * client-side clamping, and 30 Hz drag streaming.
 *
 * The socket, clock, and timers are injectable so tests can run the
 * client against fakes or a node WebSocket implementation.
 */

import {
  ClampedWrench,
  Envelope,
  Limits,
  PROTOCOL_VERSION,
  clampWrench,
} from "./protocol.js";
import { ViewModel } from "./viewmodel.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export const DEFAULT_STIFFNESS = 300; // N per meter of drag
export const DEFAULT_STREAM_HZ = 30;
export const DEFAULT_HOLD_MS = 150; // bridges the gap to the next stream tick
const FALLBACK_LIMITS: Limits = { max_force: 200, max_moment: 50 };

/** Virtual-coupling drag law: pixel displacement scaled to meters,
 * multiplied by the spring stiffness, clamped to the advertised
 * limits. Screen y grows downward, world z upward. */
export function dragToWrench(
  dxPx: number,
  dyPx: number,
  metersPerPixel: number,
  stiffness: number,
  limits: Limits,
): ClampedWrench {
  const fx = stiffness * dxPx * metersPerPixel;
  const fz = stiffness * -dyPx * metersPerPixel;
  return clampWrench(fx, fz, 0, limits);
}

export interface ClientOptions {
  url: string;
  socketFactory?: SocketFactory;
  now?: () => number;
  setIntervalFn?: (cb: () => void, ms: number) => ReturnType<typeof setInterval>;
  clearIntervalFn?: (id: ReturnType<typeof setInterval>) => void;
  stiffness?: number;
  streamHz?: number;
  holdMs?: number;
  /** Called after every state change so the UI can repaint. */
  onChange?: () => void;
}

export class ConsoleClient {
  readonly vm: ViewModel;
  private socket: SocketLike | null = null;
  private seq = 0;
  private streamTimer: ReturnType<typeof setInterval> | null = null;
  private readonly opts: ClientOptions;

  constructor(opts: ClientOptions) {
    this.opts = opts;
    this.vm = new ViewModel(opts.now);
  }

  connect(): void {
    if (this.socket !== null) return;
    const factory =
      this.opts.socketFactory ??
      ((url: string) => new WebSocket(url) as unknown as SocketLike);
    this.vm.status = "connecting";
    const sock = factory(this.opts.url);
    this.socket = sock;
    sock.onopen = () => this.notify(); // connected once hello arrives
    sock.onmessage = (event) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(String(event.data));
      } catch {
        this.vm.lastError = "malformed server message";
        this.notify();
        return;
      }
      this.vm.handleMessage(parsed);
      this.notify();
    };
    sock.onclose = () => {
      this.socket = null;
      this.vm.status = "disconnected";
      this.endDrag();
      this.notify();
    };
    sock.onerror = () => {};
    this.notify();
  }

  disconnect(): void {
    this.socket?.close();
  }

  reconnect(): void {
    if (this.socket === null) this.connect();
  }

  get limits(): Limits {
    return this.vm.hello?.limits ?? FALLBACK_LIMITS;
  }

  private notify(): void {
    this.opts.onChange?.();
  }

  private sendEnvelope(type: string, payload: object): number {
    if (this.socket === null) return -1;
    this.seq += 1;
    const envelope: Envelope<object> = {
      v: PROTOCOL_VERSION,
      type,
      seq: this.seq,
      payload,
    };
    this.socket.send(JSON.stringify(envelope));
    return this.seq;
  }

  /** Send one clamped wrench pulse; returns its seq for ack matching. */
  applyWrench(fx: number, fz: number, my = 0, holdMs?: number): number {
    const w = clampWrench(fx, fz, my, this.limits);
    if (w.clamped) this.vm.flagClamp();
    return this.sendEnvelope("apply_wrench", {
      fx: w.fx,
      fz: w.fz,
      my: w.my,
      hold_ms: holdMs ?? this.opts.holdMs ?? DEFAULT_HOLD_MS,
    });
  }

  setTarget(x: number, z: number): number {
    const ws = this.vm.hello?.workspace;
    if (ws !== undefined) {
      x = Math.min(ws.x_max, Math.max(ws.x_min, x));
      z = Math.min(ws.z_max, Math.max(ws.z_min, z));
    }
    return this.sendEnvelope("set_target", { x, z });
  }

  setMode(mode: "hold" | "teleop" | "amplify", gain?: number): number {
    const payload: { mode: string; gain?: number } = { mode };
    if (mode === "amplify" && gain !== undefined) payload.gain = gain;
    return this.sendEnvelope("set_mode", payload);
  }

  pause(): number {
    return this.sendEnvelope("pause", {});
  }

  resume(): number {
    return this.sendEnvelope("resume", {});
  }

  // --- drag interaction -----------------------------------------------

  startDrag(px: number, py: number): void {
    this.vm.drag = {
      startPx: [px, py],
      currentPx: [px, py],
      force: { fx: 0, fz: 0 },
      clamped: false,
    };
    if (this.streamTimer === null) {
      const period = 1000 / (this.opts.streamHz ?? DEFAULT_STREAM_HZ);
      const setIntervalFn = this.opts.setIntervalFn ?? setInterval;
      this.streamTimer = setIntervalFn(() => this.streamDragForce(), period);
    }
    this.notify();
  }

  moveDrag(px: number, py: number, metersPerPixel: number): void {
    const drag = this.vm.drag;
    if (drag === null) return;
    drag.currentPx = [px, py];
    const w = dragToWrench(
      px - drag.startPx[0],
      py - drag.startPx[1],
      metersPerPixel,
      this.opts.stiffness ?? DEFAULT_STIFFNESS,
      this.limits,
    );
    drag.force = { fx: w.fx, fz: w.fz };
    drag.clamped = w.clamped;
    this.notify();
  }

  /** Stop streaming; the server decays the last held wrench on its own. */
  endDrag(): void {
    if (this.streamTimer !== null) {
      const clearIntervalFn = this.opts.clearIntervalFn ?? clearInterval;
      clearIntervalFn(this.streamTimer);
      this.streamTimer = null;
    }
    if (this.vm.drag !== null) {
      this.vm.drag = null;
      this.notify();
    }
  }

  private streamDragForce(): void {
    const drag = this.vm.drag;
    if (drag === null) return;
    this.applyWrench(drag.force.fx, drag.force.fz, 0);
  }
}
