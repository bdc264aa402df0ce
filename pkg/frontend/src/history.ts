/** Bounded undo stack of pose snapshots. */

import { Pose, clonePose } from "./pose.js";

// Keep well past the guaranteed 50 steps without letting a long drag
// session grow memory forever.
export const HISTORY_LIMIT = 100;

export class History {
  private stack: Pose[] = [];

  push(pose: Pose): void {
    this.stack.push(clonePose(pose));
    if (this.stack.length > HISTORY_LIMIT) {
      this.stack.shift();
    }
  }

  pop(): Pose | null {
    const top = this.stack.pop();
    return top === undefined ? null : top;
  }

  get depth(): number {
    return this.stack.length;
  }

  clear(): void {
    this.stack = [];
  }
}
