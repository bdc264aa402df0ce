"""Fixed 18-joint skeleton: topology, Cartesian poses, polar poses.

Joint order follows the common 18-point detector convention (nose, neck,
right arm, left arm, right leg, left leg, eyes, ears).  The skeleton is a
tree rooted at the neck; the neck's parent is the world origin (0, 0).

A Cartesian pose stores one (x, y) per joint plus a visibility flag.
A polar pose stores, per joint, the signed angle of its segment relative
to the parent segment's direction and the segment length.  Angles are
counterclockwise-positive on raw coordinates and normalized to (-pi, pi].
The root entry holds the neck's own polar coordinates about the world
origin, with its angle measured against the +x axis.

Zero-length segments leave a child's reference direction undefined; the
child then measures its angle against the nearest ancestor segment that
has nonzero length, falling back to the +x axis.  Both conversion
directions apply the same rule, so conversion stays total and
round-trippable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import MissingJoint, MissingNeck

NUM_JOINTS = 18
ROOT = 1  # neck

JOINT_NAMES = [
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
]

JOINT_INDEX = {name: i for i, name in enumerate(JOINT_NAMES)}


class Group(IntEnum):
    """Segment groups that scale together during retargeting."""

    HEAD = 0
    SHOULDERS = 1
    ARMS = 2
    TORSO = 3
    WAIST = 4
    LEGS = 5


NUM_GROUPS = len(Group)

# child joint -> parent joint; the root's parent is the world origin.
_PARENT = {
    0: 1,
    1: -1,
    2: 1,
    3: 2,
    4: 3,
    5: 1,
    6: 5,
    7: 6,
    8: 1,
    9: 8,
    10: 9,
    11: 1,
    12: 11,
    13: 12,
    14: 0,
    15: 0,
    16: 14,
    17: 15,
}

# Segment i is the edge parent(i) -> i and belongs to exactly one group.
# The root segment (origin -> neck) is bucketed with the torso.
_GROUP = {
    0: Group.HEAD,
    14: Group.HEAD,
    15: Group.HEAD,
    16: Group.HEAD,
    17: Group.HEAD,
    2: Group.SHOULDERS,
    5: Group.SHOULDERS,
    3: Group.ARMS,
    4: Group.ARMS,
    6: Group.ARMS,
    7: Group.ARMS,
    1: Group.TORSO,
    8: Group.TORSO,
    11: Group.TORSO,
    9: Group.WAIST,
    12: Group.WAIST,
    10: Group.LEGS,
    13: Group.LEGS,
}

_PAIRS = ((2, 5), (3, 6), (4, 7), (8, 11), (9, 12), (10, 13), (14, 15), (16, 17))


@dataclass(frozen=True)
class Topology:
    """Parent map, group map, and left/right pairing of the skeleton."""

    parent: np.ndarray  # (18,) int; -1 marks the root's world-origin parent
    group: np.ndarray  # (18,) int; Group value of segment parent(i)->i
    left_right_pairs: tuple[tuple[int, int], ...]  # (right, left) indices

    def traversal(self) -> list[int]:
        """Joint indices ordered root-first, every parent before its child."""
        order = [ROOT]
        seen = {ROOT}
        while len(order) < NUM_JOINTS:
            for j in range(NUM_JOINTS):
                if j not in seen and self.parent[j] in seen:
                    order.append(j)
                    seen.add(j)
        return order


def topology_default() -> Topology:
    parent = np.array([_PARENT[i] for i in range(NUM_JOINTS)], dtype=np.int64)
    group = np.array([int(_GROUP[i]) for i in range(NUM_JOINTS)], dtype=np.int64)
    return Topology(parent=parent, group=group, left_right_pairs=_PAIRS)


DEFAULT_TOPOLOGY = topology_default()

# Cached traversal order; the topology is fixed so compute it once.
_TRAVERSAL = DEFAULT_TOPOLOGY.traversal()


@dataclass
class KeypointSet:
    """One detected or synthesized 2D pose.

    ``points`` is (18, 2) float64; rows of invisible joints carry no
    meaning.  ``visible`` is (18,) bool.
    """

    points: np.ndarray
    visible: np.ndarray

    def copy(self) -> "KeypointSet":
        return KeypointSet(self.points.copy(), self.visible.copy())

    def all_visible(self) -> bool:
        return bool(self.visible.all())


@dataclass
class PolarPose:
    """Tree-relative parameterization of a fully visible pose.

    ``alpha[i]`` and ``length[i]`` describe segment parent(i)->i; the
    root entry describes origin->neck.  ``root_position`` anchors the
    pose in world coordinates (it equals the neck's position).
    """

    alpha: np.ndarray  # (18,) float64, each in (-pi, pi]
    length: np.ndarray  # (18,) float64, nonnegative
    root_position: np.ndarray  # (2,) float64

    def copy(self) -> "PolarPose":
        return PolarPose(self.alpha.copy(), self.length.copy(), self.root_position.copy())


def wrap_angle(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    w = math.remainder(a, math.tau)
    if w <= -math.pi:
        w += math.tau
    return w


def _signed_angle(ref: np.ndarray, vec: np.ndarray) -> float:
    """Counterclockwise angle from ``ref`` to ``vec``, in (-pi, pi]."""
    a = math.atan2(ref[0] * vec[1] - ref[1] * vec[0], ref[0] * vec[0] + ref[1] * vec[1])
    return math.pi if a == -math.pi else a


def to_polar(k: KeypointSet, topo: Topology = DEFAULT_TOPOLOGY) -> PolarPose:
    """Convert a fully visible Cartesian pose to its polar form."""
    if not k.all_visible():
        missing = [JOINT_NAMES[i] for i in np.flatnonzero(~k.visible)]
        raise MissingJoint(f"polar conversion needs all joints; missing {missing}")
    pts = np.asarray(k.points, dtype=np.float64)
    alpha = np.zeros(NUM_JOINTS)
    length = np.zeros(NUM_JOINTS)
    ref = np.zeros((NUM_JOINTS, 2))

    root_vec = pts[ROOT]
    length[ROOT] = math.hypot(root_vec[0], root_vec[1])
    if length[ROOT] > 0.0:
        alpha[ROOT] = math.atan2(root_vec[1], root_vec[0])
        ref[ROOT] = root_vec / length[ROOT]
    else:
        ref[ROOT] = (1.0, 0.0)

    for j in _TRAVERSAL[1:]:
        p = topo.parent[j]
        vec = pts[j] - pts[p]
        length[j] = math.hypot(vec[0], vec[1])
        if length[j] > 0.0:
            alpha[j] = _signed_angle(ref[p], vec)
            ref[j] = vec / length[j]
        else:
            ref[j] = ref[p]
    return PolarPose(alpha=alpha, length=length, root_position=pts[ROOT].copy())


def to_cartesian(p: PolarPose, topo: Topology = DEFAULT_TOPOLOGY) -> KeypointSet:
    """Reconstruct joint positions from a polar pose; the inverse of to_polar."""
    pts = np.zeros((NUM_JOINTS, 2))
    ref = np.zeros((NUM_JOINTS, 2))
    pts[ROOT] = p.root_position
    if p.length[ROOT] > 0.0:
        ref[ROOT] = (math.cos(p.alpha[ROOT]), math.sin(p.alpha[ROOT]))
    else:
        ref[ROOT] = (1.0, 0.0)

    for j in _TRAVERSAL[1:]:
        par = topo.parent[j]
        c, s = math.cos(p.alpha[j]), math.sin(p.alpha[j])
        rx, ry = ref[par]
        direction = (rx * c - ry * s, rx * s + ry * c)
        pts[j, 0] = pts[par, 0] + p.length[j] * direction[0]
        pts[j, 1] = pts[par, 1] + p.length[j] * direction[1]
        ref[j] = direction if p.length[j] > 0.0 else ref[par]
    return KeypointSet(points=pts, visible=np.ones(NUM_JOINTS, dtype=bool))


def mirror(k: KeypointSet, axis_x: float, topo: Topology = DEFAULT_TOPOLOGY) -> KeypointSet:
    """Reflect a pose about the vertical line x = axis_x, swapping sides."""
    pts = k.points.copy()
    vis = k.visible.copy()
    pts[:, 0] = 2.0 * axis_x - pts[:, 0]
    for r, l in topo.left_right_pairs:
        pts[[r, l]] = pts[[l, r]]
        vis[[r, l]] = vis[[l, r]]
    return KeypointSet(points=pts, visible=vis)


def segment_mask(k: KeypointSet, topo: Topology = DEFAULT_TOPOLOGY) -> np.ndarray:
    """(18,) bool: non-root segments whose two endpoints are both visible."""
    mask = np.zeros(NUM_JOINTS, dtype=bool)
    for j in range(NUM_JOINTS):
        if j == ROOT:
            continue
        p = topo.parent[j]
        mask[j] = bool(k.visible[j] and k.visible[p])
    return mask


def mean_segment_length(k: KeypointSet, topo: Topology = DEFAULT_TOPOLOGY) -> float:
    """Mean length over measurable segments; 1.0 when none is measurable."""
    mask = segment_mask(k, topo)
    if not mask.any():
        return 1.0
    idx = np.flatnonzero(mask)
    diffs = k.points[idx] - k.points[topo.parent[idx]]
    return float(np.mean(np.hypot(diffs[:, 0], diffs[:, 1])))


def normalize(
    k: KeypointSet, topo: Topology = DEFAULT_TOPOLOGY
) -> tuple[KeypointSet, float, np.ndarray]:
    """Center a pose at the neck and divide by its mean segment length.

    Returns (normalized pose, scale, offset); ``denormalize`` undoes it.
    Coordinates of invisible joints are zeroed in the output.
    """
    if not k.visible[ROOT]:
        raise MissingNeck("the neck joint must be visible")
    offset = k.points[ROOT].copy()
    scale = mean_segment_length(k, topo)
    pts = (k.points - offset) / scale
    pts[~k.visible] = 0.0
    return KeypointSet(points=pts, visible=k.visible.copy()), scale, offset


def denormalize(k: KeypointSet, scale: float, offset: np.ndarray) -> KeypointSet:
    pts = k.points * scale + offset
    pts[~k.visible] = 0.0
    return KeypointSet(points=pts, visible=k.visible.copy())
