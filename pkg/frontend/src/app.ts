/**
 * Browser entry point: wires the DOM to the editor state, the canvas
 * painter, and the pose service client.
 *
 * The deformed overlay is always drawn from the service's own response
 * text; this file never computes retargeted coordinates itself.
 */

import { Pose, parsePoseText, serializeDocument } from "./pose.js";
import { History } from "./history.js";
import {
  EditorState,
  beginJointDrag,
  endJointDrag,
  exportDocument,
  initialState,
  loadPose,
  moveJoint,
  requestDocument,
  setFactorSource,
  setMode,
  undoEdit,
} from "./state.js";
import { ApiError, DebouncedPreview, ServiceClient } from "./api.js";
import { Viewport, fitViewport, hitTest, toPose } from "./geometry.js";
import { PERSON_STYLE, PREVIEW_STYLE, drawSkeleton } from "./draw.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
}

const canvas = byId<HTMLCanvasElement>("canvas");
const ctx = canvas.getContext("2d") as CanvasRenderingContext2D;
const poseFile = byId<HTMLInputElement>("pose-file");
const personPicker = byId<HTMLSelectElement>("person-picker");
const personRow = byId<HTMLElement>("person-row");
const artFile = byId<HTMLInputElement>("art-file");
const tauInput = byId<HTMLInputElement>("tau-input");
const tauApply = byId<HTMLButtonElement>("tau-apply");
const sourceLabel = byId<HTMLElement>("source-label");
const naiveToggle = byId<HTMLInputElement>("naive-toggle");
const undoButton = byId<HTMLButtonElement>("undo");
const exportPoseButton = byId<HTMLButtonElement>("export-pose");
const exportDeformedButton = byId<HTMLButtonElement>("export-deformed");
const errorBanner = byId<HTMLElement>("error-banner");
const staleFlag = byId<HTMLElement>("stale-flag");
const serviceInput = byId<HTMLInputElement>("service-url");

const state: EditorState = initialState(serviceInput.value);
const history = new History();

// Raw response text from the last successful deform; the export button
// writes these bytes untouched.
let previewText: string | null = null;
let previewPose: Pose | null = null;
let previewStale = false;
let pendingLoadText: string | null = null;
let viewport: Viewport | null = null;

function client(): ServiceClient {
  return new ServiceClient(state.serviceUrl);
}

const preview = new DebouncedPreview({
  onResult(text) {
    const parsed = parsePoseText(text);
    if (parsed.kind === "error") {
      showError(`service sent an unreadable pose: ${parsed.message}`);
      return;
    }
    previewText = text;
    previewPose = parsed.doc.poses[0] ?? null;
    previewStale = false;
    clearError();
    render();
  },
  onError(err: ApiError) {
    showError(`${err.code}: ${err.message}`);
    previewStale = previewText !== null;
    render();
  },
  onStale() {
    // Service unreachable; keep the last overlay but mark it stale so
    // editing can continue without pretending the preview is current.
    previewStale = true;
    render();
  },
});

function showError(message: string): void {
  errorBanner.textContent = message;
  errorBanner.hidden = false;
}

function clearError(): void {
  errorBanner.hidden = true;
}

function sourceText(): string {
  switch (state.factorSource.kind) {
    case "none":
      return "no art factors set";
    case "pose":
      return `factors from ${state.factorSource.label}`;
    case "numbers":
      return `factors [${state.factorSource.tau.join(", ")}]`;
  }
}

function render(): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  sourceLabel.textContent = sourceText();
  staleFlag.hidden = !previewStale;
  exportDeformedButton.disabled = previewText === null;
  undoButton.disabled = history.depth === 0;
  if (state.pose === null) return;
  if (viewport === null) {
    viewport = fitViewport(state.pose, canvas.width, canvas.height);
  }
  if (previewPose !== null) {
    drawSkeleton(ctx, previewPose, viewport, PREVIEW_STYLE);
  }
  drawSkeleton(ctx, state.pose, viewport, PERSON_STYLE, state.selectedJoint);
}

function requestPreview(debounced: boolean): void {
  if (state.pose === null || state.factorSource.kind === "none") return;
  const doc = requestDocument(state);
  if (doc === null) return;
  // Capture now so a later source/mode change cannot mutate a request
  // that is still sitting in the debounce window.
  const source = state.factorSource;
  const mode = state.mode;
  const send = () => client().deform(doc, source, mode);
  if (debounced) {
    preview.schedule(send);
  } else {
    preview.flush(send);
  }
}

// -- pose loading ----------------------------------------------------------

function applyLoad(text: string, person?: number): void {
  const outcome = loadPose(state, history, text, person);
  if (outcome.kind === "error") {
    showError(outcome.message);
    return;
  }
  if (outcome.kind === "pick") {
    pendingLoadText = text;
    personPicker.replaceChildren(
      ...Array.from({ length: outcome.count }, (_, i) => {
        const opt = document.createElement("option");
        opt.value = String(i);
        opt.textContent = `person ${i + 1}`;
        return opt;
      }),
    );
    personRow.hidden = false;
    return;
  }
  personRow.hidden = true;
  pendingLoadText = null;
  previewText = null;
  previewPose = null;
  previewStale = false;
  viewport = null;
  clearError();
  render();
  requestPreview(false);
}

poseFile.addEventListener("change", () => {
  const file = poseFile.files?.[0];
  if (file === undefined) return;
  file.text().then(applyLoad);
});

personPicker.addEventListener("change", () => {
  if (pendingLoadText !== null) {
    applyLoad(pendingLoadText, Number(personPicker.value));
  }
});

// -- factor source ----------------------------------------------------------

artFile.addEventListener("change", () => {
  const file = artFile.files?.[0];
  if (file === undefined) return;
  file.text().then((text) => {
    const parsed = parsePoseText(text);
    if (parsed.kind === "error") {
      showError(`art file: ${parsed.message}`);
      return;
    }
    setFactorSource(state, { kind: "pose", text, label: file.name });
    clearError();
    render();
    requestPreview(false);
  });
});

tauApply.addEventListener("click", () => {
  const parts = tauInput.value.split(",").map((p) => Number(p.trim()));
  if (parts.length !== 6 || parts.some((v) => !Number.isFinite(v) || v <= 0)) {
    showError("factors need six positive numbers, comma separated");
    return;
  }
  setFactorSource(state, {
    kind: "numbers",
    tau: parts as [number, number, number, number, number, number],
  });
  clearError();
  render();
  requestPreview(false);
});

naiveToggle.addEventListener("change", () => {
  setMode(state, naiveToggle.checked ? "naive" : "learned");
  requestPreview(false);
});

serviceInput.addEventListener("change", () => {
  state.serviceUrl = serviceInput.value.replace(/\/$/, "");
});

// -- canvas interaction ------------------------------------------------------

function canvasPoint(ev: PointerEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    ((ev.clientX - rect.left) * canvas.width) / rect.width,
    ((ev.clientY - rect.top) * canvas.height) / rect.height,
  ];
}

canvas.addEventListener("pointerdown", (ev) => {
  if (state.pose === null || viewport === null) return;
  const [cx, cy] = canvasPoint(ev);
  const joint = hitTest(state.pose, viewport, cx, cy);
  if (joint === null) return;
  beginJointDrag(state, history, joint);
  canvas.setPointerCapture(ev.pointerId);
  render();
});

canvas.addEventListener("pointermove", (ev) => {
  if (state.selectedJoint === null || viewport === null) return;
  const [cx, cy] = canvasPoint(ev);
  const [x, y] = toPose(viewport, cx, cy);
  moveJoint(state, x, y);
  render();
  requestPreview(true);
});

canvas.addEventListener("pointerup", (ev) => {
  if (state.selectedJoint === null) return;
  endJointDrag(state);
  canvas.releasePointerCapture(ev.pointerId);
  render();
  requestPreview(false);
});

// -- undo and export ---------------------------------------------------------

undoButton.addEventListener("click", () => {
  if (undoEdit(state, history)) {
    render();
    requestPreview(false);
  }
});

function download(name: string, text: string): void {
  const url = URL.createObjectURL(new Blob([text], { type: "application/json" }));
  const a = document.createElement("a");
  a.href = url;
  a.download = name;
  a.click();
  URL.revokeObjectURL(url);
}

exportPoseButton.addEventListener("click", () => {
  const doc = exportDocument(state);
  if (doc === null) return;
  download("pose.json", serializeDocument(doc));
});

exportDeformedButton.addEventListener("click", () => {
  if (previewText !== null) download("deformed.json", previewText);
});

render();
