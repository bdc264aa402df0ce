/** Canvas/pose coordinate mapping and joint hit-testing. */

import { Pose } from "./pose.js";

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/**
 * Fit the pose's bounding box inside a canvas with a margin. Invisible
 * joints sit at (0, 0) placeholders and would drag the box toward the
 * origin, so only visible joints vote; if none are visible, fall back
 * to the unit box around the origin.
 */
export function fitViewport(
  pose: Pose,
  width: number,
  height: number,
  margin = 40,
): Viewport {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const j of pose.joints) {
    if (!j.visible) continue;
    minX = Math.min(minX, j.x);
    minY = Math.min(minY, j.y);
    maxX = Math.max(maxX, j.x);
    maxY = Math.max(maxY, j.y);
  }
  if (minX > maxX) {
    minX = -1;
    minY = -1;
    maxX = 1;
    maxY = 1;
  }
  const spanX = Math.max(maxX - minX, 1e-6);
  const spanY = Math.max(maxY - minY, 1e-6);
  const scale = Math.min(
    (width - 2 * margin) / spanX,
    (height - 2 * margin) / spanY,
  );
  const offsetX = (width - scale * (minX + maxX)) / 2;
  const offsetY = (height - scale * (minY + maxY)) / 2;
  return { scale, offsetX, offsetY };
}

export function toCanvas(v: Viewport, x: number, y: number): [number, number] {
  return [v.scale * x + v.offsetX, v.scale * y + v.offsetY];
}

export function toPose(v: Viewport, cx: number, cy: number): [number, number] {
  return [(cx - v.offsetX) / v.scale, (cy - v.offsetY) / v.scale];
}

/**
 * Index of the joint nearest to a canvas point, or null when none is
 * within `radius` pixels. Invisible joints are placed by the renderer
 * too, so they are pickable here as well.
 */
export function hitTest(
  pose: Pose,
  v: Viewport,
  cx: number,
  cy: number,
  radius = 12,
): number | null {
  let best: number | null = null;
  let bestDist = radius;
  pose.joints.forEach((j, i) => {
    const [jx, jy] = toCanvas(v, j.x, j.y);
    const d = Math.hypot(jx - cx, jy - cy);
    if (d <= bestDist) {
      best = i;
      bestDist = d;
    }
  });
  return best;
}
