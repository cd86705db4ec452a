// Rendering as data: a RenderModel becomes a flat list of draw commands the
// canvas adapter executes. Tests assert on the command list, so "identical
// message streams produce identical rendered sequences" is checkable
// without a browser.

import { RenderModel } from "./state.js";

export const STAGE_W = 960;
export const STAGE_H = 640;
export const CHAR_HALF_W = 20;
export const CHAR_H = 80;

export type DrawCommand =
  | { op: "clear"; color: string }
  | { op: "rect"; x: number; y: number; w: number; h: number; color: string }
  | { op: "text"; x: number; y: number; text: string; color: string; size: number };

export const ACTION_NAMES = [
  "idle", "left", "right", "jump", "guard", "punch", "kick", "special",
];

const P1_COLOR = "#4ecdc4";
const P2_COLOR = "#ff6b6b";

export interface Viewport {
  width: number;
  height: number;
}

/** World x/y (y up from the floor) to canvas coordinates (y down). */
function toCanvas(vp: Viewport, x: number, y: number): { cx: number; cy: number } {
  return { cx: (x / STAGE_W) * vp.width, cy: vp.height - (y / STAGE_H) * vp.height };
}

export function renderCommands(model: RenderModel, vp: Viewport, hpMax: number,
                               energyMax: number): DrawCommand[] {
  const out: DrawCommand[] = [{ op: "clear", color: "#10141c" }];
  const scaleX = vp.width / STAGE_W;
  const scaleY = vp.height / STAGE_H;

  model.chars.forEach((c, i) => {
    const { cx, cy } = toCanvas(vp, c.x, c.y);
    out.push({
      op: "rect",
      x: cx - CHAR_HALF_W * scaleX,
      y: cy - CHAR_H * scaleY,
      w: 2 * CHAR_HALF_W * scaleX,
      h: CHAR_H * scaleY,
      color: i === 0 ? P1_COLOR : P2_COLOR,
    });
    out.push({
      op: "text",
      x: cx,
      y: cy - CHAR_H * scaleY - 6,
      text: ACTION_NAMES[c.action] ?? "?",
      color: "#c8d0dc",
      size: 12,
    });
  });

  // HP / energy bars: p1 top-left, p2 top-right
  const barW = vp.width * 0.4;
  model.chars.forEach((c, i) => {
    const hpFrac = Math.max(0, Math.min(1, c.hp / hpMax));
    const enFrac = Math.max(0, Math.min(1, c.energy / energyMax));
    const x0 = i === 0 ? 8 : vp.width - 8 - barW;
    out.push({ op: "rect", x: x0, y: 8, w: barW, h: 10, color: "#30363f" });
    out.push({
      op: "rect",
      x: i === 0 ? x0 : x0 + barW * (1 - hpFrac),
      y: 8,
      w: barW * hpFrac,
      h: 10,
      color: i === 0 ? P1_COLOR : P2_COLOR,
    });
    out.push({ op: "rect", x: x0, y: 22, w: barW, h: 4, color: "#30363f" });
    out.push({
      op: "rect",
      x: i === 0 ? x0 : x0 + barW * (1 - enFrac),
      y: 22,
      w: barW * enFrac,
      h: 4,
      color: "#f7d154",
    });
  });

  out.push({
    op: "text",
    x: vp.width / 2,
    y: 18,
    text: `${Math.ceil(model.timer / 60)}`,
    color: "#e8ecf2",
    size: 16,
  });
  out.push({
    op: "text",
    x: vp.width / 2,
    y: 34,
    text: `opponent v${model.opponentVersion}`,
    color: "#8a94a2",
    size: 11,
  });
  return out;
}

/** Execute commands on a real 2D context (browser side; not unit-tested). */
export function drawToCanvas(ctx: CanvasRenderingContext2D, commands: DrawCommand[]): void {
  for (const cmd of commands) {
    switch (cmd.op) {
      case "clear":
        ctx.fillStyle = cmd.color;
        ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
        break;
      case "rect":
        ctx.fillStyle = cmd.color;
        ctx.fillRect(cmd.x, cmd.y, cmd.w, cmd.h);
        break;
      case "text":
        ctx.fillStyle = cmd.color;
        ctx.font = `${cmd.size}px monospace`;
        ctx.textAlign = "center";
        ctx.fillText(cmd.text, cmd.x, cmd.y);
        break;
    }
  }
}
