/** Canvas skeleton painter. Pure drawing; no state of its own. */

import { BONES, Pose } from "./pose.js";
import { Viewport, toCanvas } from "./geometry.js";

export interface SkeletonStyle {
  stroke: string;
  joint: string;
  lineWidth: number;
}

export const PERSON_STYLE: SkeletonStyle = {
  stroke: "#2b6cb0",
  joint: "#2b6cb0",
  lineWidth: 3,
};

// Contrasting color so the deformed overlay reads against the original.
export const PREVIEW_STYLE: SkeletonStyle = {
  stroke: "#dd6b20",
  joint: "#dd6b20",
  lineWidth: 2,
};

export function drawSkeleton(
  ctx: CanvasRenderingContext2D,
  pose: Pose,
  v: Viewport,
  style: SkeletonStyle,
  selected: number | null = null,
): void {
  ctx.save();
  ctx.strokeStyle = style.stroke;
  ctx.lineWidth = style.lineWidth;
  ctx.lineCap = "round";
  for (const [a, b] of BONES) {
    const ja = pose.joints[a];
    const jb = pose.joints[b];
    if (ja === undefined || jb === undefined) continue;
    // Bones touching an occluded joint are dashed instead of hidden, so
    // the joint stays findable and draggable.
    ctx.setLineDash(ja.visible && jb.visible ? [] : [4, 4]);
    const [ax, ay] = toCanvas(v, ja.x, ja.y);
    const [bx, by] = toCanvas(v, jb.x, jb.y);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }
  ctx.setLineDash([]);
  pose.joints.forEach((j, i) => {
    const [x, y] = toCanvas(v, j.x, j.y);
    const r = i === selected ? 7 : 5;
    ctx.beginPath();
    ctx.arc(x, y, r, 0, 2 * Math.PI);
    if (j.visible) {
      ctx.fillStyle = style.joint;
      ctx.fill();
    } else {
      // Hollow ring marks an occluded joint.
      ctx.fillStyle = "#ffffff";
      ctx.fill();
      ctx.stroke();
    }
    if (i === selected) {
      ctx.strokeStyle = "#1a202c";
      ctx.stroke();
      ctx.strokeStyle = style.stroke;
    }
  });
  ctx.restore();
}
