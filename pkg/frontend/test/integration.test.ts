/** End-to-end loopback against the real Python bridge server.
 *
 * Spawns the simulator over a real WebSocket, sends a drag-derived
 * 30 N pulse, fuzzes 1000 commands through the client's clamping
 * path, then checks the server's run log: the pulse must appear as an
 * external-wrench plateau at the acked tick, and no command may ever
 * arrive clamped (the client respects the advertised limits first).
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import WebSocket from "ws";
import { afterAll, beforeAll, expect, it } from "vitest";

import { ConsoleClient, SocketLike, dragToWrench } from "../src/client.js";
import { AckPayload } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const serverScript = join(here, "support", "serve_and_dump.py");

let child: ChildProcess;
let port = 0;
let outDir = "";
let csvPath = "";
let serverExit: Promise<number | null>;
let serverStderr = "";

function until(
  predicate: () => boolean,
  what: string,
  timeoutMs = 30_000,
): Promise<void> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const timer = setInterval(() => {
      if (predicate()) {
        clearInterval(timer);
        resolve();
      } else if (Date.now() - started > timeoutMs) {
        clearInterval(timer);
        reject(new Error(`timed out waiting for ${what}\n${serverStderr}`));
      }
    }, 5);
  });
}

beforeAll(async () => {
  outDir = mkdtempSync(join(tmpdir(), "console-loopback-"));
  csvPath = join(outDir, "runlog.csv");
  child = spawn("python3", [serverScript, "--out", csvPath,
                            "--duration", "30"]);
  child.stderr?.on("data", (chunk: Buffer) => {
    serverStderr += chunk.toString();
  });
  serverExit = new Promise((resolve) => child.on("close", resolve));
  let stdout = "";
  child.stdout?.on("data", (chunk: Buffer) => {
    stdout += chunk.toString();
    const match = /READY (\d+)/.exec(stdout);
    if (match !== null) port = Number(match[1]);
  });
  await until(() => port > 0, "server READY line");
});

afterAll(async () => {
  if (child.exitCode === null) child.kill();
  await serverExit;
  rmSync(outDir, { recursive: true, force: true });
});

it("drag pulse reaches the run log and fuzzed commands never violate limits", async () => {
  const acks: AckPayload[] = [];
  let lastAck: AckPayload | null = null;
  const client = new ConsoleClient({
    url: `ws://127.0.0.1:${port}/session`,
    socketFactory: (url) => new WebSocket(url) as unknown as SocketLike,
    onChange: () => {
      if (client.vm.lastAck !== lastAck) {
        lastAck = client.vm.lastAck;
        if (lastAck !== null) acks.push(lastAck);
      }
    },
  });
  client.connect();
  await until(() => client.vm.status === "connected", "hello");
  expect(client.vm.hello?.role).toBe("controller");
  expect(client.limits).toEqual({ max_force: 200, max_moment: 50 });

  // A 0.1 m drag at 300 N/m: exactly the 30 N pulse, via the drag law.
  const pulse = dragToWrench(100, 0, 0.001, 300, client.limits);
  expect(pulse.fx).toBeCloseTo(30, 9);
  expect(pulse.clamped).toBe(false);
  const pulseSeq = client.applyWrench(pulse.fx, pulse.fz, 0, 400);
  await until(
    () => acks.some((a) => a.command_seq === pulseSeq),
    "pulse ack",
  );
  const pulseAck = acks.find((a) => a.command_seq === pulseSeq)!;
  expect(pulseAck.clamped).toBe(false);
  const tick0 = pulseAck.applied_at_tick;

  // Fence: let the engine move well past the plateau's first rows so
  // the fuzz below cannot touch them.
  await until(
    () => (client.vm.snapshot?.tick ?? 0) > tick0 + 20,
    "engine to advance past the pulse",
  );

  // 1000-command fuzz through the client's clamping path. Raw inputs
  // far exceed the limits; the client must shrink every one of them.
  const rand = mulberry(7);
  const expected = acks.length + 1000;
  for (let i = 0; i < 1000; i++) {
    client.applyWrench(
      (rand() - 0.5) * 2000,
      (rand() - 0.5) * 2000,
      (rand() - 0.5) * 400,
      50,
    );
  }
  await until(() => acks.length >= expected, "all fuzz acks", 90_000);
  for (const ack of acks) {
    expect(ack.clamped).toBe(false); // server agreed: nothing to clamp
  }

  client.disconnect();
  const code = await serverExit;
  expect(code).toBe(0);

  // The log's external-wrench column shows the pulse from the acked
  // tick on: a 30 N plateau within 1 N, within 2 ticks of receipt.
  const lines = readFileSync(csvPath, "utf8").trim().split("\n");
  const header = lines[0].split(",");
  const fxCol = header.indexOf("wext_fx");
  const fzCol = header.indexOf("wext_fz");
  expect(fxCol).toBeGreaterThan(-1);
  for (const offset of [0, 1, 2]) {
    const row = lines[1 + tick0 + offset].split(",");
    expect(Math.abs(Number(row[fxCol]) - 30)).toBeLessThanOrEqual(1);
    expect(Math.abs(Number(row[fzCol]))).toBeLessThanOrEqual(1);
  }
}, 120_000);

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
