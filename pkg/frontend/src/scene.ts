/** Pure snapshot-to-scene renderer.
 *
 * `render` maps a ViewModel to a plain-data Scene: drawing primitives
 * in world coordinates (meters) plus a transform that fits the
 * advertised workspace into the canvas to scale. A separate painter
 * turns the scene into canvas calls; nothing here touches the DOM, so
 * the whole visual layer is unit-testable.
 */

import { Workspace, forceMagnitude } from "./protocol.js";
import { ViewModel } from "./viewmodel.js";

export interface Transform {
  scale: number; // px per meter
  offsetX: number; // x_px = offsetX + x * scale
  offsetY: number; // y_px = offsetY - z * scale (screen y grows downward)
}

export function worldToPx(t: Transform, x: number, z: number): [number, number] {
  return [t.offsetX + x * t.scale, t.offsetY - z * t.scale];
}

export function pxToWorld(t: Transform, px: number, py: number): [number, number] {
  return [(px - t.offsetX) / t.scale, (t.offsetY - py) / t.scale];
}

export type SceneItem =
  | { kind: "line"; from: [number, number]; to: [number, number]; widthPx: number; color: string; dashed?: boolean }
  | { kind: "circle"; at: [number, number]; radiusPx: number; color: string; fill: boolean }
  | { kind: "polygon"; points: [number, number][]; color: string; fill: boolean }
  | { kind: "label"; at: [number, number]; text: string; color: string }
  | { kind: "arrow"; from: [number, number]; to: [number, number]; widthPx: number; color: string };

export interface GaugeView {
  latestPct: number;
  meanPct: number;
  maxPct: number;
  history: number[];
}

export interface Scene {
  widthPx: number;
  heightPx: number;
  transform: Transform;
  items: SceneItem[];
  grayed: boolean;
  stale: boolean;
  banner: string | null;
  showReconnect: boolean;
  clampWarning: boolean;
  statusLine: string | null;
  gauge: GaugeView | null;
}

export const PAYLOAD_HALF = 0.15; // drawn payload half-extent, m
export const ARROW_METERS_PER_NEWTON = 1 / 250; // 200 N renders as 0.8 m
export const FORCE_ARROW_THRESHOLD = 2.0; // N; hide estimator noise
const MARGIN_M = 0.3;
const FALLBACK_WORKSPACE: Workspace = { x_min: 0, x_max: 4, z_min: 0, z_max: 2.5 };

/** Largest transform that fits the workspace (plus margin) into the
 * canvas while preserving aspect ratio, centered both ways. */
export function fitTransform(
  ws: Workspace,
  widthPx: number,
  heightPx: number,
): Transform {
  const wM = ws.x_max - ws.x_min + 2 * MARGIN_M;
  const hM = ws.z_max - ws.z_min + 2 * MARGIN_M;
  const scale = Math.min(widthPx / wM, heightPx / hM);
  const padX = (widthPx - scale * wM) / 2;
  const padY = (heightPx - scale * hM) / 2;
  return {
    scale,
    offsetX: padX - scale * (ws.x_min - MARGIN_M),
    offsetY: padY + scale * (ws.z_max + MARGIN_M),
  };
}

export function tensionColor(applied: number, scaleMax: number): string {
  const r = Math.min(1, Math.max(0, applied / scaleMax));
  return `hsl(${Math.round(120 * (1 - r))}, 75%, 42%)`;
}

export function cableWidthPx(applied: number, scaleMax: number): number {
  const r = Math.min(1, Math.max(0, applied / scaleMax));
  return 1 + 3 * r;
}

function payloadCorners(x: number, z: number, theta: number): [number, number][] {
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  const h = PAYLOAD_HALF;
  const local: [number, number][] = [[-h, -h], [h, -h], [h, h], [-h, h]];
  return local.map(([lx, lz]) => [x + c * lx - s * lz, z + s * lx + c * lz]);
}

export function render(vm: ViewModel, widthPx: number, heightPx: number): Scene {
  const ws = vm.hello?.workspace ?? FALLBACK_WORKSPACE;
  const transform = fitTransform(ws, widthPx, heightPx);
  const items: SceneItem[] = [];
  const snap = vm.snapshot;
  const scene: Scene = {
    widthPx,
    heightPx,
    transform,
    items,
    grayed: vm.status !== "connected",
    stale: vm.isStale(),
    banner: null,
    showReconnect: false,
    clampWarning: vm.clampWarning,
    statusLine: null,
    gauge: null,
  };
  if (vm.status === "disconnected") {
    scene.banner = "disconnected — click to reconnect";
    scene.showReconnect = true;
  } else if (vm.status !== "connected") {
    scene.banner = "connecting…";
  }
  if (snap === null) return scene;

  scene.statusLine = [
    `mode ${snap.mode}`,
    `t ${snap.time.toFixed(2)} s`,
    snap.paused ? "paused" : snap.done ? "finished" : "running",
  ].join(" · ");

  // Workspace frame.
  items.push({
    kind: "polygon",
    points: [
      [ws.x_min, ws.z_min],
      [ws.x_max, ws.z_min],
      [ws.x_max, ws.z_max],
      [ws.x_min, ws.z_max],
    ],
    color: "#9aa0a6",
    fill: false,
  });

  // Cables, tension-coded; anchors; labels in newtons at midspan.
  const scaleMax = Math.max(150, ...snap.modules.map((m) => m.applied));
  for (const m of snap.modules) {
    items.push({
      kind: "line",
      from: m.anchor,
      to: m.attachment,
      widthPx: cableWidthPx(m.applied, scaleMax),
      color: tensionColor(m.applied, scaleMax),
    });
    items.push({
      kind: "circle",
      at: m.anchor,
      radiusPx: 5,
      color: "#3b3b3b",
      fill: true,
    });
    items.push({
      kind: "label",
      at: [
        (m.anchor[0] + m.attachment[0]) / 2,
        (m.anchor[1] + m.attachment[1]) / 2,
      ],
      text: `${m.applied.toFixed(0)} N`,
      color: "#202124",
    });
  }

  // Payload box, rotated with the pose.
  const { x, z, theta } = snap.pose;
  items.push({
    kind: "polygon",
    points: payloadCorners(x, z, theta),
    color: "#4c6ef5",
    fill: true,
  });

  // Estimated external force, drawn at the payload.
  const mag = forceMagnitude(snap.w_ext_estimate);
  if (mag > FORCE_ARROW_THRESHOLD) {
    items.push({
      kind: "arrow",
      from: [x, z],
      to: [
        x + snap.w_ext_estimate.fx * ARROW_METERS_PER_NEWTON,
        z + snap.w_ext_estimate.fz * ARROW_METERS_PER_NEWTON,
      ],
      widthPx: 2.5,
      color: "#d9480f",
    });
  }

  // Active drag: virtual spring from the payload to the cursor.
  if (vm.drag !== null) {
    const cursor = pxToWorld(transform, ...vm.drag.currentPx);
    const force = Math.hypot(vm.drag.force.fx, vm.drag.force.fz);
    items.push({
      kind: "line",
      from: [x, z],
      to: cursor,
      widthPx: 1.5,
      color: "#c2255c",
      dashed: true,
    });
    items.push({
      kind: "label",
      at: cursor,
      text: `${force.toFixed(0)} N${vm.drag.clamped ? " (clamped)" : ""}`,
      color: "#c2255c",
    });
  }

  if (vm.payloadWeight !== null) {
    scene.gauge = {
      latestPct: 100 * vm.gauge.latest,
      meanPct: 100 * vm.gauge.meanRatio,
      maxPct: 100 * vm.gauge.maxRatio,
      history: [...vm.gauge.history],
    };
  }
  return scene;
}
