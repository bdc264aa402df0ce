"""Reading and writing poses: detector JSON, canonical JSON, SVG.

Two input dialects are understood.  The detector dialect carries
``people[*].pose_keypoints_2d`` as 54 flat numbers (x, y, confidence per
joint); a joint is visible when its confidence exceeds the threshold.
The canonical dialect is this package's own versioned document with
named joints and explicit visibility.  Writers emit the canonical
dialect only, with coordinates rounded to 6 fractional digits.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IoError, ParseError, SchemaError, VersionError
from .pose import (
    DEFAULT_TOPOLOGY,
    JOINT_NAMES,
    NUM_JOINTS,
    ROOT,
    KeypointSet,
    Topology,
)

log = logging.getLogger(__name__)

CANONICAL_VERSION = 1


@dataclass
class PoseDocument:
    """A set of poses plus optional provenance, as stored on disk."""

    poses: list[KeypointSet]
    image_size: tuple[int, int] | None = None
    source: str | None = None


@dataclass(frozen=True)
class SvgStyle:
    """Per-pose drawing style for the SVG renderer."""

    stroke_color: str = "#1f77b4"
    joint_radius: float = 4.0
    opacity: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.opacity <= 1.0:
            raise SchemaError(f"opacity must be in [0, 1], got {self.opacity}")
        if self.joint_radius <= 0.0:
            raise SchemaError("joint radius must be > 0")


def _loads(data: bytes | str) -> object:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not valid UTF-8: {e}", detail=f"byte {e.start}") from e
    try:
        return json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e.msg}", detail=f"offset {e.pos}") from e


def _require(cond: bool, message: str, path: str):
    if not cond:
        raise SchemaError(message, detail=path)


def _finite_number(value: object, path: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             "expected a number", path)
    out = float(value)
    _require(np.isfinite(out), "coordinate must be finite", path)
    return out


def parse_openpose(
    data: bytes | str, confidence_threshold: float = 0.0
) -> list[KeypointSet]:
    """Parse detector output; one KeypointSet per detected person."""
    obj = _loads(data)
    _require(isinstance(obj, dict), "top level must be an object", "$")
    people = obj.get("people")
    _require(isinstance(people, list), "'people' must be an array", "people")
    poses = []
    for pi, person in enumerate(people):
        path = f"people[{pi}]"
        _require(isinstance(person, dict), "person must be an object", path)
        flat = person.get("pose_keypoints_2d")
        path = f"{path}.pose_keypoints_2d"
        _require(isinstance(flat, list), "missing keypoint array", path)
        _require(len(flat) == NUM_JOINTS * 3,
                 f"expected {NUM_JOINTS * 3} numbers, got {len(flat)}", path)
        points = np.zeros((NUM_JOINTS, 2))
        visible = np.zeros(NUM_JOINTS, dtype=bool)
        for j in range(NUM_JOINTS):
            x, y, conf = flat[3 * j], flat[3 * j + 1], flat[3 * j + 2]
            c = _finite_number(conf, f"{path}[{3 * j + 2}]")
            if c > confidence_threshold:
                points[j, 0] = _finite_number(x, f"{path}[{3 * j}]")
                points[j, 1] = _finite_number(y, f"{path}[{3 * j + 1}]")
                visible[j] = True
        poses.append(KeypointSet(points=points, visible=visible))
    return poses


def parse_canonical(data: bytes | str) -> PoseDocument:
    """Parse the canonical pose document; unknown fields are ignored."""
    obj = _loads(data)
    _require(isinstance(obj, dict), "top level must be an object", "$")
    version = obj.get("version")
    if version != CANONICAL_VERSION:
        raise VersionError(f"unsupported document version {version!r}", detail="version")
    raw_poses = obj.get("poses")
    _require(isinstance(raw_poses, list), "'poses' must be an array", "poses")
    poses = []
    for pi, raw in enumerate(raw_poses):
        base = f"poses[{pi}]"
        _require(isinstance(raw, dict), "pose must be an object", base)
        joints = raw.get("joints")
        _require(isinstance(joints, list), "'joints' must be an array", f"{base}.joints")
        _require(len(joints) == NUM_JOINTS,
                 f"expected {NUM_JOINTS} joints, got {len(joints)}", f"{base}.joints")
        points = np.zeros((NUM_JOINTS, 2))
        visible = np.zeros(NUM_JOINTS, dtype=bool)
        for j, entry in enumerate(joints):
            path = f"{base}.joints[{j}]"
            _require(isinstance(entry, dict), "joint must be an object", path)
            _require(entry.get("name") == JOINT_NAMES[j],
                     f"joint {j} must be named {JOINT_NAMES[j]!r}", f"{path}.name")
            vis = entry.get("visible")
            _require(isinstance(vis, bool), "'visible' must be a boolean", f"{path}.visible")
            if vis:
                points[j, 0] = _finite_number(entry.get("x"), f"{path}.x")
                points[j, 1] = _finite_number(entry.get("y"), f"{path}.y")
                visible[j] = True
        poses.append(KeypointSet(points=points, visible=visible))

    image_size = None
    raw_size = obj.get("image_size")
    if raw_size is not None:
        _require(isinstance(raw_size, list) and len(raw_size) == 2, "image_size must be [w, h]",
                 "image_size")
        w, h = raw_size
        _require(isinstance(w, int) and isinstance(h, int) and w > 0 and h > 0,
                 "image_size entries must be positive integers", "image_size")
        image_size = (w, h)
    source = obj.get("source")
    if source is not None:
        _require(isinstance(source, str), "'source' must be a string", "source")
    return PoseDocument(poses=poses, image_size=image_size, source=source)


def parse_pose_file(data: bytes | str, confidence_threshold: float = 0.0) -> PoseDocument:
    """Parse either dialect, sniffing by top-level keys."""
    obj = _loads(data)
    if isinstance(obj, dict) and "people" in obj and "version" not in obj:
        return PoseDocument(poses=parse_openpose(data, confidence_threshold))
    return parse_canonical(data)


def _round6(x: float) -> float:
    # Canonical quantization: 6 fractional digits, idempotent.
    return round(float(x), 6)


def pose_to_json(k: KeypointSet) -> dict:
    """Canonical JSON object for one pose (the 'joints' wrapper)."""
    joints = []
    for j in range(NUM_JOINTS):
        if k.visible[j]:
            joints.append(
                {
                    "name": JOINT_NAMES[j],
                    "x": _round6(k.points[j, 0]),
                    "y": _round6(k.points[j, 1]),
                    "visible": True,
                }
            )
        else:
            joints.append({"name": JOINT_NAMES[j], "visible": False})
    return {"joints": joints}


def write_pose(doc: PoseDocument) -> str:
    """Serialize a document to canonical JSON text (deterministic)."""
    out: dict = {"version": CANONICAL_VERSION, "poses": [pose_to_json(k) for k in doc.poses]}
    if doc.image_size is not None:
        out["image_size"] = [int(doc.image_size[0]), int(doc.image_size[1])]
    if doc.source is not None:
        out["source"] = doc.source
    return json.dumps(out, indent=1) + "\n"


def load_dataset(path: str | Path) -> tuple[list[KeypointSet], list[str]]:
    """Load every .json pose file under a directory, sorted by name.

    Returns (poses, warnings).  A file that fails to parse contributes a
    warning instead of aborting the load.
    """
    root = Path(path)
    if not root.is_dir():
        raise IoError(f"not a directory: {root}")
    poses: list[KeypointSet] = []
    warnings: list[str] = []
    for f in sorted(root.glob("*.json")):
        try:
            doc = parse_pose_file(f.read_bytes())
            poses.extend(doc.poses)
        except (ParseError, SchemaError, OSError) as e:
            warnings.append(f"{f.name}: {e}")
            log.warning("skipping %s: %s", f.name, e)
    return poses, warnings


def render_svg(
    poses: list[tuple[KeypointSet, SvgStyle]],
    canvas: tuple[int, int],
    topo: Topology = DEFAULT_TOPOLOGY,
) -> str:
    """Draw poses as an SVG: circles on visible joints, lines on edges.

    An edge is drawn when both its joints are visible; the synthetic
    origin->neck edge is never drawn.
    """
    w, h = int(canvas[0]), int(canvas[1])
    if w <= 0 or h <= 0:
        raise SchemaError(f"canvas must be positive, got {canvas}")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">'
    ]
    for k, style in poses:
        parts.append(
            f'<g stroke="{style.stroke_color}" fill="{style.stroke_color}" '
            f'stroke-width="2" opacity="{style.opacity:g}">'
        )
        for j in range(NUM_JOINTS):
            p = topo.parent[j]
            if j == ROOT or not (k.visible[j] and k.visible[p]):
                continue
            parts.append(
                f'<line x1="{k.points[p, 0]:.2f}" y1="{k.points[p, 1]:.2f}" '
                f'x2="{k.points[j, 0]:.2f}" y2="{k.points[j, 1]:.2f}"/>'
            )
        for j in range(NUM_JOINTS):
            if k.visible[j]:
                parts.append(
                    f'<circle cx="{k.points[j, 0]:.2f}" cy="{k.points[j, 1]:.2f}" '
                    f'r="{style.joint_radius:g}"/>'
                )
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
