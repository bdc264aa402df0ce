/** Pose data model plus parsing/serialization of the two JSON dialects. */

export const JOINT_NAMES = [
  "nose",
  "neck",
  "r_shoulder",
  "r_elbow",
  "r_wrist",
  "l_shoulder",
  "l_elbow",
  "l_wrist",
  "r_hip",
  "r_knee",
  "r_ankle",
  "l_hip",
  "l_knee",
  "l_ankle",
  "r_eye",
  "l_eye",
  "r_ear",
  "l_ear",
] as const;

export const NUM_JOINTS = 18;

// Segments drawn between joints, as index pairs (parent first).
export const BONES: ReadonlyArray<readonly [number, number]> = [
  [1, 0],
  [1, 2],
  [2, 3],
  [3, 4],
  [1, 5],
  [5, 6],
  [6, 7],
  [1, 8],
  [8, 9],
  [9, 10],
  [1, 11],
  [11, 12],
  [12, 13],
  [0, 14],
  [0, 15],
  [14, 16],
  [15, 17],
];

export interface Joint {
  name: string;
  x: number;
  y: number;
  visible: boolean;
}

export interface Pose {
  joints: Joint[];
}

export interface PoseDocument {
  version: number;
  poses: Pose[];
  imageSize: [number, number] | null;
  source: string | null;
}

export type ParseResult =
  | { kind: "document"; doc: PoseDocument }
  | { kind: "error"; message: string };

function quantize(v: number): number {
  // Same 6-digit rounding the service writes, so re-serializing a parsed
  // file does not drift.
  return Math.round(v * 1e6) / 1e6;
}

function emptyJoint(index: number): Joint {
  return { name: JOINT_NAMES[index] ?? `joint_${index}`, x: 0, y: 0, visible: false };
}

function jointFrom(value: unknown, index: number): Joint | string {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    return `joint ${index} is not an object`;
  }
  const rec = value as Record<string, unknown>;
  const name = rec["name"];
  if (name !== JOINT_NAMES[index]) {
    return `joint ${index} should be named ${JOINT_NAMES[index]}`;
  }
  if (rec["visible"] === false) {
    return emptyJoint(index);
  }
  if (rec["visible"] !== true) {
    return `joint ${index} needs a boolean visible flag`;
  }
  const x = rec["x"];
  const y = rec["y"];
  if (typeof x !== "number" || !Number.isFinite(x)) {
    return `joint ${index} has no finite x`;
  }
  if (typeof y !== "number" || !Number.isFinite(y)) {
    return `joint ${index} has no finite y`;
  }
  return { name: JOINT_NAMES[index] as string, x, y, visible: true };
}

function poseFrom(value: unknown, index: number): Pose | string {
  if (typeof value !== "object" || value === null) {
    return `pose ${index} is not an object`;
  }
  const joints = (value as Record<string, unknown>)["joints"];
  if (!Array.isArray(joints) || joints.length !== NUM_JOINTS) {
    return `pose ${index} needs exactly ${NUM_JOINTS} joints`;
  }
  const out: Joint[] = [];
  for (let j = 0; j < NUM_JOINTS; j++) {
    const joint = jointFrom(joints[j], j);
    if (typeof joint === "string") return joint;
    out.push(joint);
  }
  return { joints: out };
}

function parseCanonical(root: Record<string, unknown>): ParseResult {
  if (typeof root["version"] !== "number") {
    return { kind: "error", message: "missing document version" };
  }
  const poses = root["poses"];
  if (!Array.isArray(poses) || poses.length === 0) {
    return { kind: "error", message: "document holds no poses" };
  }
  const parsed: Pose[] = [];
  for (let i = 0; i < poses.length; i++) {
    const pose = poseFrom(poses[i], i);
    if (typeof pose === "string") return { kind: "error", message: pose };
    parsed.push(pose);
  }
  let imageSize: [number, number] | null = null;
  const size = root["image_size"];
  if (Array.isArray(size) && size.length === 2 &&
      typeof size[0] === "number" && typeof size[1] === "number") {
    imageSize = [size[0], size[1]];
  }
  const source = typeof root["source"] === "string" ? root["source"] : null;
  return {
    kind: "document",
    doc: { version: root["version"], poses: parsed, imageSize, source },
  };
}

function parseOpenPose(root: Record<string, unknown>, threshold: number): ParseResult {
  const people = root["people"];
  if (!Array.isArray(people) || people.length === 0) {
    return { kind: "error", message: "file holds no people" };
  }
  const poses: Pose[] = [];
  for (let p = 0; p < people.length; p++) {
    const person = people[p];
    if (typeof person !== "object" || person === null) {
      return { kind: "error", message: `person ${p} is not an object` };
    }
    const flat = (person as Record<string, unknown>)["pose_keypoints_2d"];
    if (!Array.isArray(flat) || flat.length !== NUM_JOINTS * 3) {
      return {
        kind: "error",
        message: `person ${p} needs ${NUM_JOINTS * 3} keypoint numbers`,
      };
    }
    const joints: Joint[] = [];
    for (let j = 0; j < NUM_JOINTS; j++) {
      const x = flat[3 * j];
      const y = flat[3 * j + 1];
      const c = flat[3 * j + 2];
      if (typeof x !== "number" || typeof y !== "number" || typeof c !== "number") {
        return { kind: "error", message: `person ${p} joint ${j} is not numeric` };
      }
      if (c > threshold) {
        joints.push({ name: JOINT_NAMES[j] as string, x, y, visible: true });
      } else {
        joints.push(emptyJoint(j));
      }
    }
    poses.push({ joints });
  }
  return {
    kind: "document",
    doc: { version: 1, poses, imageSize: null, source: null },
  };
}

/**
 * Parse either pose dialect. OpenPose files are recognized by their
 * "people" array; everything else must be a canonical document.
 */
export function parsePoseText(text: string, threshold = 0): ParseResult {
  let root: unknown;
  try {
    root = JSON.parse(text);
  } catch (e) {
    return { kind: "error", message: `malformed JSON: ${(e as Error).message}` };
  }
  if (typeof root !== "object" || root === null || Array.isArray(root)) {
    return { kind: "error", message: "top level must be an object" };
  }
  const rec = root as Record<string, unknown>;
  if ("people" in rec && !("version" in rec)) {
    return parseOpenPose(rec, threshold);
  }
  return parseCanonical(rec);
}

/** Canonical document as a plain JSON object, for embedding in requests. */
export function documentToJson(doc: PoseDocument): Record<string, unknown> {
  const poses = doc.poses.map((pose) => ({
    joints: pose.joints.map((j) =>
      j.visible
        ? { name: j.name, x: quantize(j.x), y: quantize(j.y), visible: true }
        : { name: j.name, visible: false },
    ),
  }));
  const out: Record<string, unknown> = { version: doc.version, poses };
  if (doc.imageSize !== null) out["image_size"] = doc.imageSize;
  if (doc.source !== null) out["source"] = doc.source;
  return out;
}

/** Canonical serialization; the indent mirrors the service's writer. */
export function serializeDocument(doc: PoseDocument): string {
  return JSON.stringify(documentToJson(doc), null, 1) + "\n";
}

export function clonePose(pose: Pose): Pose {
  return { joints: pose.joints.map((j) => ({ ...j })) };
}

export function posesEqual(a: Pose, b: Pose): boolean {
  return a.joints.every((j, i) => {
    const o = b.joints[i];
    if (o === undefined) return false;
    if (j.visible !== o.visible) return false;
    return !j.visible || (j.x === o.x && j.y === o.y);
  });
}
