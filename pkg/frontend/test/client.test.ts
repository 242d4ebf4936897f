import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ConsoleClient, SocketLike, dragToWrench } from "../src/client.js";
import { Envelope, PROTOCOL_VERSION } from "../src/protocol.js";
import { makeHello, makeSnapshot } from "./fixtures.js";

const LIMITS = { max_force: 200, max_moment: 50 };

class FakeSocket implements SocketLike {
  sent: Envelope[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: ((err: unknown) => void) | null = null;

  send(data: string): void {
    this.sent.push(JSON.parse(data) as Envelope);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  open(): void {
    this.onopen?.();
  }

  deliver(message: unknown): void {
    this.onmessage?.({ data: JSON.stringify(message) });
  }
}

function makeClient(opts: Partial<ConstructorParameters<typeof ConsoleClient>[0]> = {}) {
  const sockets: FakeSocket[] = [];
  const client = new ConsoleClient({
    url: "ws://test/session",
    socketFactory: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    ...opts,
  });
  client.connect();
  const sock = sockets[sockets.length - 1];
  sock.open();
  sock.deliver(makeHello());
  return { client, sockets, sock };
}

describe("dragToWrench", () => {
  it("maps a zero-length drag to zero force", () => {
    const w = dragToWrench(0, 0, 0.01, 300, LIMITS);
    expect(w).toEqual({ fx: 0, fz: 0, my: 0, clamped: false });
  });

  it("converts a 0.1 m drag at 300 N/m into 30 N", () => {
    const w = dragToWrench(100, 0, 0.001, 300, LIMITS);
    expect(w.fx).toBeCloseTo(30, 9);
    expect(w.fz).toBe(0);
    expect(w.clamped).toBe(false);
  });

  it("points screen-down drags along negative z", () => {
    const w = dragToWrench(0, 100, 0.001, 300, LIMITS);
    expect(w.fz).toBeCloseTo(-30, 9);
  });

  it("clamps a 2 m drag to the advertised 200 N and says so", () => {
    const w = dragToWrench(2000, 0, 0.001, 300, LIMITS);
    expect(Math.hypot(w.fx, w.fz)).toBeCloseTo(200, 9);
    expect(w.clamped).toBe(true);
  });

  it("preserves direction when clamping", () => {
    const w = dragToWrench(3000, -4000, 0.001, 300, LIMITS);
    expect(w.fx / w.fz).toBeCloseTo(3000 / 4000, 9);
    expect(Math.hypot(w.fx, w.fz)).toBeCloseTo(200, 9);
  });
});

describe("ConsoleClient", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("connects and learns its role from hello", () => {
    const { client } = makeClient();
    expect(client.vm.status).toBe("connected");
    expect(client.vm.hello?.role).toBe("controller");
    expect(client.limits.max_force).toBe(200);
  });

  it("numbers outgoing commands with strictly increasing seq", () => {
    const { client, sock } = makeClient();
    client.setTarget(2, 1);
    client.pause();
    client.resume();
    client.setMode("amplify", 0.5);
    const seqs = sock.sent.map((m) => m.seq);
    expect(seqs).toEqual([...seqs].sort((a, b) => a - b));
    expect(new Set(seqs).size).toBe(seqs.length);
    expect(sock.sent.every((m) => m.v === PROTOCOL_VERSION)).toBe(true);
  });

  it("clamps targets into the advertised workspace", () => {
    const { client, sock } = makeClient();
    client.setTarget(-10, 99);
    const payload = sock.sent[0].payload as { x: number; z: number };
    expect(payload.x).toBe(0);
    expect(payload.z).toBe(2.5);
  });

  it("streams the drag force at 30 Hz while held, then stops", () => {
    const { client, sock } = makeClient();
    client.startDrag(480, 320);
    client.moveDrag(580, 320, 0.001); // 0.1 m right -> 30 N +x
    vi.advanceTimersByTime(1000);
    const wrenches = sock.sent.filter((m) => m.type === "apply_wrench");
    expect(wrenches.length).toBeGreaterThanOrEqual(29);
    expect(wrenches.length).toBeLessThanOrEqual(31);
    for (const msg of wrenches) {
      const p = msg.payload as { fx: number; fz: number; hold_ms: number };
      expect(p.fx).toBeCloseTo(30, 9);
      expect(p.hold_ms).toBeGreaterThan(1000 / 30); // outlives the gap
    }
    client.endDrag();
    const before = sock.sent.length;
    vi.advanceTimersByTime(1000);
    expect(sock.sent.length).toBe(before);
    expect(client.vm.drag).toBeNull();
  });

  it("never emits a command beyond the advertised limits", () => {
    const { client, sock } = makeClient();
    const rand = mulberry(42);
    for (let i = 0; i < 1000; i++) {
      client.startDrag(0, 0);
      client.moveDrag(
        (rand() - 0.5) * 10_000,
        (rand() - 0.5) * 10_000,
        0.002,
        );
      vi.advanceTimersByTime(34);
      client.endDrag();
      if (i % 3 === 0) client.applyWrench((rand() - 0.5) * 2000, (rand() - 0.5) * 2000, (rand() - 0.5) * 500);
    }
    const wrenches = sock.sent.filter((m) => m.type === "apply_wrench");
    expect(wrenches.length).toBeGreaterThan(1000);
    for (const msg of wrenches) {
      const p = msg.payload as { fx: number; fz: number; my: number };
      expect(Math.hypot(p.fx, p.fz)).toBeLessThanOrEqual(200 + 1e-9);
      expect(Math.abs(p.my)).toBeLessThanOrEqual(50 + 1e-9);
    }
  });

  it("raises the clamp warning when a drag saturates", () => {
    const { client } = makeClient();
    client.startDrag(0, 0);
    client.moveDrag(5000, 0, 0.001);
    expect(client.vm.drag?.clamped).toBe(true);
    expect(client.vm.clampWarning).toBe(true);
  });

  it("reports disconnect and reconnects on demand", () => {
    const { client, sockets, sock } = makeClient();
    sock.deliver(makeSnapshot());
    sock.close();
    expect(client.vm.status).toBe("disconnected");
    client.reconnect();
    expect(sockets.length).toBe(2);
    sockets[1].open();
    sockets[1].deliver(makeHello({ role: "observer" }));
    expect(client.vm.status).toBe("connected");
    expect(client.vm.hello?.role).toBe("observer");
  });

  it("stops streaming if the socket drops mid-drag", () => {
    const { client, sock } = makeClient();
    client.startDrag(0, 0);
    client.moveDrag(50, 0, 0.001);
    vi.advanceTimersByTime(100);
    const before = sock.sent.length;
    expect(before).toBeGreaterThan(0);
    sock.close();
    vi.advanceTimersByTime(1000);
    expect(sock.sent.length).toBe(before);
  });
});

/** Small deterministic PRNG so the fuzz run is reproducible. */
function mulberry(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a += 0x6d2b79f5;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
