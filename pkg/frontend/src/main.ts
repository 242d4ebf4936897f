/** Browser entry point: DOM wiring for the console. Configuration is
 * limited to the server URL (the `server` query parameter or the text
 * field); every other number comes from the server's hello message. */

import { ConsoleClient } from "./client.js";
import { paint } from "./painter.js";
import { pxToWorld, render, worldToPx } from "./scene.js";

const DRAG_GRAB_RADIUS_M = 0.35;

function defaultUrl(): string {
  const fromQuery = new URLSearchParams(location.search).get("server");
  if (fromQuery !== null) return fromQuery;
  const host = location.hostname === "" ? "127.0.0.1" : location.hostname;
  return `ws://${host}:8712/session`;
}

function setup(): void {
  const canvas = document.getElementById("workspace") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (ctx === null) throw new Error("canvas 2d context unavailable");
  const urlInput = document.getElementById("server-url") as HTMLInputElement;
  const connectButton = document.getElementById("connect") as HTMLButtonElement;
  const modeSelect = document.getElementById("mode") as HTMLSelectElement;
  const gainInput = document.getElementById("gain") as HTMLInputElement;
  const pauseButton = document.getElementById("pause") as HTMLButtonElement;
  const roleBadge = document.getElementById("role") as HTMLSpanElement;

  urlInput.value = defaultUrl();
  let client = makeClient(urlInput.value);

  function makeClient(url: string): ConsoleClient {
    const c = new ConsoleClient({ url, onChange: requestRepaint });
    c.connect();
    return c;
  }

  let repaintQueued = false;
  function requestRepaint(): void {
    if (repaintQueued) return;
    repaintQueued = true;
    requestAnimationFrame(() => {
      repaintQueued = false;
      draw();
    });
  }

  function draw(): void {
    const scene = render(client.vm, canvas.width, canvas.height);
    paint(ctx as CanvasRenderingContext2D, scene);
    const hello = client.vm.hello;
    roleBadge.textContent = hello === null ? "" : hello.role;
    pauseButton.textContent =
      client.vm.snapshot?.paused === true ? "resume" : "pause";
  }

  connectButton.addEventListener("click", () => {
    client.disconnect();
    client = makeClient(urlInput.value);
  });

  modeSelect.addEventListener("change", () => {
    const mode = modeSelect.value as "hold" | "teleop" | "amplify";
    client.setMode(mode, Number(gainInput.value));
  });

  pauseButton.addEventListener("click", () => {
    if (client.vm.snapshot?.paused === true) client.resume();
    else client.pause();
  });

  function canvasPoint(event: MouseEvent): [number, number] {
    const rect = canvas.getBoundingClientRect();
    return [
      ((event.clientX - rect.left) / rect.width) * canvas.width,
      ((event.clientY - rect.top) / rect.height) * canvas.height,
    ];
  }

  let pressPoint: [number, number] | null = null;
  let dragging = false;

  canvas.addEventListener("mousedown", (event) => {
    if (client.vm.status === "disconnected") {
      client.reconnect();
      return;
    }
    const snap = client.vm.snapshot;
    if (snap === null) return;
    const [px, py] = canvasPoint(event);
    pressPoint = [px, py];
    const t = render(client.vm, canvas.width, canvas.height).transform;
    const payloadPx = worldToPx(t, snap.pose.x, snap.pose.z);
    const distM = Math.hypot(px - payloadPx[0], py - payloadPx[1]) / t.scale;
    if (distM <= DRAG_GRAB_RADIUS_M) {
      dragging = true;
      client.startDrag(px, py);
    }
  });

  canvas.addEventListener("mousemove", (event) => {
    if (!dragging) return;
    const [px, py] = canvasPoint(event);
    const t = render(client.vm, canvas.width, canvas.height).transform;
    client.moveDrag(px, py, 1 / t.scale);
  });

  window.addEventListener("mouseup", (event) => {
    if (dragging) {
      dragging = false;
      client.endDrag();
      pressPoint = null;
      return;
    }
    if (pressPoint === null) return;
    const [px, py] = canvasPoint(event as MouseEvent);
    const moved = Math.hypot(px - pressPoint[0], py - pressPoint[1]);
    pressPoint = null;
    if (moved > 4) return; // a swipe, not a click
    const t = render(client.vm, canvas.width, canvas.height).transform;
    const [x, z] = pxToWorld(t, px, py);
    client.setTarget(x, z);
  });

  requestRepaint();
  // Repaint on a timer as well so staleness and clamp badges decay
  // even when no messages arrive.
  setInterval(requestRepaint, 250);
}

setup();
