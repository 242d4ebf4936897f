/** Canvas painter: turns a Scene into 2-D context calls. Kept free of
 * logic — everything decidable is decided in scene.ts. */

import { Scene, SceneItem, Transform, worldToPx } from "./scene.js";

const ARROW_HEAD_PX = 9;

function drawArrowHead(
  ctx: CanvasRenderingContext2D,
  from: [number, number],
  to: [number, number],
): void {
  const angle = Math.atan2(to[1] - from[1], to[0] - from[0]);
  ctx.beginPath();
  ctx.moveTo(to[0], to[1]);
  ctx.lineTo(
    to[0] - ARROW_HEAD_PX * Math.cos(angle - 0.45),
    to[1] - ARROW_HEAD_PX * Math.sin(angle - 0.45),
  );
  ctx.lineTo(
    to[0] - ARROW_HEAD_PX * Math.cos(angle + 0.45),
    to[1] - ARROW_HEAD_PX * Math.sin(angle + 0.45),
  );
  ctx.closePath();
  ctx.fill();
}

function paintItem(
  ctx: CanvasRenderingContext2D,
  t: Transform,
  item: SceneItem,
): void {
  switch (item.kind) {
    case "line": {
      ctx.strokeStyle = item.color;
      ctx.lineWidth = item.widthPx;
      ctx.setLineDash(item.dashed === true ? [6, 4] : []);
      ctx.beginPath();
      ctx.moveTo(...worldToPx(t, ...item.from));
      ctx.lineTo(...worldToPx(t, ...item.to));
      ctx.stroke();
      ctx.setLineDash([]);
      break;
    }
    case "circle": {
      const [cx, cy] = worldToPx(t, ...item.at);
      ctx.beginPath();
      ctx.arc(cx, cy, item.radiusPx, 0, 2 * Math.PI);
      if (item.fill) {
        ctx.fillStyle = item.color;
        ctx.fill();
      } else {
        ctx.strokeStyle = item.color;
        ctx.lineWidth = 1.5;
        ctx.stroke();
      }
      break;
    }
    case "polygon": {
      ctx.beginPath();
      item.points.forEach(([x, z], i) => {
        const [px, py] = worldToPx(t, x, z);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.closePath();
      if (item.fill) {
        ctx.fillStyle = item.color;
        ctx.fill();
      } else {
        ctx.strokeStyle = item.color;
        ctx.lineWidth = 1.5;
        ctx.stroke();
      }
      break;
    }
    case "label": {
      const [px, py] = worldToPx(t, ...item.at);
      ctx.fillStyle = item.color;
      ctx.font = "12px system-ui, sans-serif";
      ctx.textAlign = "center";
      ctx.fillText(item.text, px, py - 6);
      break;
    }
    case "arrow": {
      const from = worldToPx(t, ...item.from);
      const to = worldToPx(t, ...item.to);
      ctx.strokeStyle = item.color;
      ctx.fillStyle = item.color;
      ctx.lineWidth = item.widthPx;
      ctx.beginPath();
      ctx.moveTo(...from);
      ctx.lineTo(...to);
      ctx.stroke();
      drawArrowHead(ctx, from, to);
      break;
    }
  }
}

function paintGauge(ctx: CanvasRenderingContext2D, scene: Scene): void {
  const gauge = scene.gauge;
  if (gauge === null) return;
  const x = 12;
  const y = scene.heightPx - 64;
  const w = 220;
  const h = 52;
  ctx.fillStyle = "rgba(255, 255, 255, 0.85)";
  ctx.fillRect(x, y, w, h);
  ctx.strokeStyle = "#9aa0a6";
  ctx.strokeRect(x, y, w, h);
  ctx.fillStyle = "#202124";
  ctx.font = "12px system-ui, sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(
    `effort ${gauge.latestPct.toFixed(1)}% of weight`,
    x + 8,
    y + 16,
  );
  ctx.fillText(
    `mean ${gauge.meanPct.toFixed(1)}%  max ${gauge.maxPct.toFixed(1)}%`,
    x + 8,
    y + 32,
  );
  // Sparkline over the bounded history, 0-50% full scale.
  const n = gauge.history.length;
  if (n > 1) {
    ctx.strokeStyle = "#4c6ef5";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let i = 0; i < n; i++) {
      const gx = x + 8 + (i / (n - 1)) * (w - 16);
      const gy = y + h - 6 - Math.min(1, gauge.history[i] / 0.5) * 12;
      if (i === 0) ctx.moveTo(gx, gy);
      else ctx.lineTo(gx, gy);
    }
    ctx.stroke();
  }
}

export function paint(ctx: CanvasRenderingContext2D, scene: Scene): void {
  ctx.clearRect(0, 0, scene.widthPx, scene.heightPx);
  ctx.fillStyle = "#f8f9fa";
  ctx.fillRect(0, 0, scene.widthPx, scene.heightPx);

  ctx.save();
  if (scene.grayed) ctx.globalAlpha = 0.35;
  for (const item of scene.items) paintItem(ctx, scene.transform, item);
  ctx.restore();

  if (scene.statusLine !== null) {
    ctx.fillStyle = "#202124";
    ctx.font = "13px system-ui, sans-serif";
    ctx.textAlign = "left";
    ctx.fillText(scene.statusLine, 12, 20);
  }
  if (scene.stale) {
    ctx.fillStyle = "#e8590c";
    ctx.font = "bold 13px system-ui, sans-serif";
    ctx.textAlign = "right";
    ctx.fillText("STALE", scene.widthPx - 12, 20);
  }
  if (scene.clampWarning) {
    ctx.fillStyle = "#c2255c";
    ctx.font = "bold 13px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("force clamped to limit", scene.widthPx / 2, 20);
  }
  if (scene.banner !== null) {
    ctx.fillStyle = "rgba(33, 37, 41, 0.75)";
    ctx.fillRect(0, scene.heightPx / 2 - 24, scene.widthPx, 48);
    ctx.fillStyle = "#ffffff";
    ctx.font = "16px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(scene.banner, scene.widthPx / 2, scene.heightPx / 2 + 5);
  }
  paintGauge(ctx, scene);
}
