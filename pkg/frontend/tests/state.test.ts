import { describe, expect, it } from "vitest";
import { JOINT_NAMES, Pose, serializeDocument } from "../src/pose.js";
import { HISTORY_LIMIT, History } from "../src/history.js";
import {
  EditorState,
  beginJointDrag,
  endJointDrag,
  exportDocument,
  initialState,
  loadPose,
  moveJoint,
  requestDocument,
  undoEdit,
} from "../src/state.js";

function pose(offset = 0): Pose {
  return {
    joints: JOINT_NAMES.map((name, i) => ({
      name,
      x: 10 * i + offset,
      y: 20 * i,
      visible: true,
    })),
  };
}

function docText(...poses: Pose[]): string {
  return serializeDocument({ version: 1, poses, imageSize: null, source: null });
}

function freshEditor(text?: string): { state: EditorState; history: History } {
  const state = initialState("http://127.0.0.1:0");
  const history = new History();
  if (text !== undefined) {
    const outcome = loadPose(state, history, text);
    expect(outcome.kind).toBe("loaded");
  }
  return { state, history };
}

describe("loadPose", () => {
  it("loads a single-person file directly", () => {
    const { state } = freshEditor(docText(pose()));
    expect(state.pose?.joints[4]?.x).toBe(40);
    expect(state.error).toBeNull();
  });

  it("asks for a person choice on multi-person files", () => {
    const { state, history } = freshEditor();
    const outcome = loadPose(state, history, docText(pose(), pose(100)));
    expect(outcome).toEqual({ kind: "pick", count: 2 });
    expect(state.pose).toBeNull();
  });

  it("loads the chosen person", () => {
    const { state, history } = freshEditor();
    loadPose(state, history, docText(pose(), pose(100)), 1);
    expect(state.person).toBe(1);
    expect(state.pose?.joints[0]?.x).toBe(100);
  });

  it("keeps the current pose when a load fails", () => {
    const { state, history } = freshEditor(docText(pose()));
    const before = structuredClone(state.pose);
    const outcome = loadPose(state, history, "{broken");
    expect(outcome.kind).toBe("error");
    expect(state.pose).toEqual(before);
    expect(state.error).not.toBeNull();
  });

  it("resets undo history on load", () => {
    const { state, history } = freshEditor(docText(pose()));
    beginJointDrag(state, history, 4);
    moveJoint(state, 1, 2);
    loadPose(state, history, docText(pose(5)));
    expect(history.depth).toBe(0);
  });
});

describe("drag editing", () => {
  it("moves the selected joint and marks it visible", () => {
    const text = docText(pose());
    const { state, history } = freshEditor(text);
    state.pose!.joints[7]!.visible = false;
    beginJointDrag(state, history, 7);
    moveJoint(state, -5, -6);
    const joint = state.pose!.joints[7]!;
    expect([joint.x, joint.y, joint.visible]).toEqual([-5, -6, true]);
    expect(state.dirty).toBe(true);
  });

  it("does nothing without an active drag", () => {
    const { state } = freshEditor(docText(pose()));
    moveJoint(state, 123, 456);
    expect(state.pose!.joints.every((j, i) => j.x === 10 * i)).toBe(true);
  });

  it("one snapshot per gesture, restored exactly by undo", () => {
    const { state, history } = freshEditor(docText(pose()));
    const before = structuredClone(state.pose);
    beginJointDrag(state, history, 4);
    moveJoint(state, 1, 1);
    moveJoint(state, 2, 2);
    moveJoint(state, 3, 3);
    endJointDrag(state);
    expect(history.depth).toBe(1);
    expect(undoEdit(state, history)).toBe(true);
    expect(state.pose).toEqual(before);
    expect(state.dirty).toBe(false);
  });

  it("undo with an empty stack reports false", () => {
    const { state, history } = freshEditor(docText(pose()));
    expect(undoEdit(state, history)).toBe(false);
  });

  it("keeps at least 50 undo steps and stays bounded", () => {
    const { state, history } = freshEditor(docText(pose()));
    for (let i = 0; i < 150; i++) {
      beginJointDrag(state, history, 4);
      moveJoint(state, i, i);
      endJointDrag(state);
    }
    expect(history.depth).toBeGreaterThanOrEqual(50);
    expect(history.depth).toBeLessThanOrEqual(HISTORY_LIMIT);
    for (let i = 0; i < 50; i++) {
      expect(undoEdit(state, history)).toBe(true);
    }
    // 50 undos from x=149 land back on the state before drag 100.
    expect(state.pose!.joints[4]!.x).toBe(99);
  });
});

describe("documents", () => {
  it("request document carries only the working pose", () => {
    const { state, history } = freshEditor();
    loadPose(state, history, docText(pose(), pose(100)), 1);
    const doc = requestDocument(state)!;
    expect(doc.poses).toHaveLength(1);
    expect(doc.poses[0]!.joints[0]!.x).toBe(100);
  });

  it("export keeps every person from a multi-person file", () => {
    const { state, history } = freshEditor();
    loadPose(state, history, docText(pose(), pose(100)), 1);
    beginJointDrag(state, history, 0);
    moveJoint(state, 777, 0);
    const doc = exportDocument(state)!;
    expect(doc.poses).toHaveLength(2);
    expect(doc.poses[0]!.joints[0]!.x).toBe(0);
    expect(doc.poses[1]!.joints[0]!.x).toBe(777);
  });

  it("zero edits export serializes back to the input text", () => {
    const text = docText(pose(), pose(100));
    const { state, history } = freshEditor();
    loadPose(state, history, text, 0);
    expect(serializeDocument(exportDocument(state)!)).toBe(text);
  });
});
