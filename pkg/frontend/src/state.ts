/**
 * Editor state and its transitions.
 *
 * Every mutation of the working pose goes through an explicit action here;
 * rendering and network code only read. Drags snapshot once per gesture so
 * undo restores the pose as it was before the pointer went down.
 */

import {
  NUM_JOINTS,
  ParseResult,
  Pose,
  PoseDocument,
  clonePose,
  parsePoseText,
} from "./pose.js";
import { History } from "./history.js";

/** Where the art-reference factors come from. */
export type FactorSource =
  | { kind: "none" }
  | { kind: "pose"; text: string; label: string }
  | { kind: "numbers"; tau: [number, number, number, number, number, number] };

export type DeformMode = "learned" | "naive";

export interface EditorState {
  doc: PoseDocument | null;
  person: number;
  pose: Pose | null;
  selectedJoint: number | null;
  factorSource: FactorSource;
  mode: DeformMode;
  serviceUrl: string;
  error: string | null;
  dirty: boolean;
}

export function initialState(serviceUrl: string): EditorState {
  return {
    doc: null,
    person: 0,
    pose: null,
    selectedJoint: null,
    factorSource: { kind: "none" },
    mode: "learned",
    serviceUrl,
    error: null,
    dirty: false,
  };
}

export type LoadOutcome =
  | { kind: "loaded" }
  | { kind: "pick"; count: number }
  | { kind: "error"; message: string };

/**
 * Replace the working pose from file text. Multi-person files need a
 * person index; the caller shows a picker and calls again. A parse error
 * leaves the current pose untouched.
 */
export function loadPose(
  state: EditorState,
  history: History,
  text: string,
  person?: number,
): LoadOutcome {
  const parsed: ParseResult = parsePoseText(text);
  if (parsed.kind === "error") {
    state.error = parsed.message;
    return { kind: "error", message: parsed.message };
  }
  const doc = parsed.doc;
  if (doc.poses.length > 1 && person === undefined) {
    return { kind: "pick", count: doc.poses.length };
  }
  const index = person ?? 0;
  const pose = doc.poses[index];
  if (pose === undefined) {
    state.error = `file has no person ${index}`;
    return { kind: "error", message: state.error };
  }
  state.doc = doc;
  state.person = index;
  state.pose = clonePose(pose);
  state.selectedJoint = null;
  state.error = null;
  state.dirty = false;
  history.clear();
  return { kind: "loaded" };
}

/** Start a drag gesture: select the joint and snapshot for undo. */
export function beginJointDrag(
  state: EditorState,
  history: History,
  joint: number,
): void {
  if (state.pose === null || joint < 0 || joint >= NUM_JOINTS) return;
  state.selectedJoint = joint;
  history.push(state.pose);
}

/** Move the selected joint; dragging an occluded joint makes it visible. */
export function moveJoint(state: EditorState, x: number, y: number): void {
  if (state.pose === null || state.selectedJoint === null) return;
  const joint = state.pose.joints[state.selectedJoint];
  if (joint === undefined) return;
  joint.x = x;
  joint.y = y;
  joint.visible = true;
  state.dirty = true;
}

export function endJointDrag(state: EditorState): void {
  state.selectedJoint = null;
}

export function undoEdit(state: EditorState, history: History): boolean {
  const prev = history.pop();
  if (prev === null || state.pose === null) return false;
  state.pose = prev;
  state.selectedJoint = null;
  state.dirty = history.depth > 0;
  return true;
}

export function setFactorSource(state: EditorState, source: FactorSource): void {
  state.factorSource = source;
}

export function setMode(state: EditorState, mode: DeformMode): void {
  state.mode = mode;
}

/** The working pose alone, for service requests. */
export function requestDocument(state: EditorState): PoseDocument | null {
  if (state.pose === null) return null;
  return {
    version: state.doc?.version ?? 1,
    poses: [clonePose(state.pose)],
    imageSize: state.doc?.imageSize ?? null,
    source: state.doc?.source ?? null,
  };
}

/**
 * The loaded document with the working pose substituted back in, so
 * exporting an untouched multi-person file keeps every person.
 */
export function exportDocument(state: EditorState): PoseDocument | null {
  if (state.doc === null || state.pose === null) return null;
  const poses = state.doc.poses.map((p, i) =>
    i === state.person ? clonePose(state.pose as Pose) : clonePose(p),
  );
  return { ...state.doc, poses };
}
