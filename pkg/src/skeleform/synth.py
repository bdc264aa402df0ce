"""Synthetic full-body poses for self-supervised training.

A fixed stick-figure template (image convention, y grows downward)
provides canonical segment lengths; samples perturb each joint angle
uniformly inside per-joint bounds, rotate the whole body about the neck,
jitter the global scale, and translate the anchor.  Segment lengths stay
at template * global scale, so body proportions are canonical in every
sample while placement and articulation vary.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SchemaError
from .pose import (
    JOINT_NAMES,
    NUM_JOINTS,
    ROOT,
    KeypointSet,
    PolarPose,
    to_cartesian,
    to_polar,
    wrap_angle,
)

# Canonical standing figure, neck at the local origin.
_TEMPLATE_POINTS = np.array(
    [
        [0.0, -28.0],  # nose
        [0.0, 0.0],  # neck
        [-42.0, 4.0],  # r_shoulder
        [-54.0, 60.0],  # r_elbow
        [-60.0, 112.0],  # r_wrist
        [42.0, 4.0],  # l_shoulder
        [54.0, 60.0],  # l_elbow
        [60.0, 112.0],  # l_wrist
        [-24.0, 108.0],  # r_hip
        [-27.0, 196.0],  # r_knee
        [-29.0, 280.0],  # r_ankle
        [24.0, 108.0],  # l_hip
        [27.0, 196.0],  # l_knee
        [29.0, 280.0],  # l_ankle
        [-9.0, -37.0],  # r_eye
        [9.0, -37.0],  # l_eye
        [-20.0, -33.0],  # r_ear
        [20.0, -33.0],  # l_ear
    ]
)

# Uniform half-width of each joint's angle perturbation, radians.
# Rigid attachments move little; limbs articulate.
_ANGLE_BOUNDS = {
    "nose": 0.18,
    "neck": 0.0,  # handled by the whole-body rotation below
    "r_shoulder": 0.12,
    "l_shoulder": 0.12,
    "r_elbow": 0.5,
    "l_elbow": 0.5,
    "r_wrist": 0.6,
    "l_wrist": 0.6,
    "r_hip": 0.06,
    "l_hip": 0.06,
    "r_knee": 0.25,
    "l_knee": 0.25,
    "r_ankle": 0.3,
    "l_ankle": 0.3,
    "r_eye": 0.10,
    "l_eye": 0.10,
    "r_ear": 0.10,
    "l_ear": 0.10,
}

_BODY_ROTATION = 0.25  # radians, whole body about the neck
_SCALE_RANGE = (0.8, 1.25)  # log-uniform global length jitter
_ANCHOR = np.array([256.0, 120.0])
_ANCHOR_JITTER = 40.0


def template_pose(anchor: np.ndarray = _ANCHOR) -> KeypointSet:
    """The unperturbed template placed at the given neck position."""
    pts = _TEMPLATE_POINTS + np.asarray(anchor, dtype=np.float64)
    return KeypointSet(points=pts, visible=np.ones(NUM_JOINTS, dtype=bool))


def template_polar() -> PolarPose:
    return to_polar(template_pose())


def template_lengths() -> np.ndarray:
    """(18,) canonical segment lengths (root entry included)."""
    return template_polar().length.copy()


def synth_dataset(n: int, seed: int = 0) -> list[KeypointSet]:
    """Generate n fully visible poses, deterministic per seed."""
    if n < 0:
        raise SchemaError(f"n must be >= 0, got {n}")
    bounds = np.array([_ANGLE_BOUNDS[name] for name in JOINT_NAMES])
    base = template_polar()
    rng = np.random.default_rng(seed)
    log_lo, log_hi = math.log(_SCALE_RANGE[0]), math.log(_SCALE_RANGE[1])

    poses = []
    for _ in range(n):
        jitter = rng.uniform(-bounds, bounds)
        rotation = rng.uniform(-_BODY_ROTATION, _BODY_ROTATION)
        scale = math.exp(rng.uniform(log_lo, log_hi))
        anchor = _ANCHOR + rng.uniform(-_ANCHOR_JITTER, _ANCHOR_JITTER, size=2)

        alpha = base.alpha + jitter
        # The stored root alpha orients the body frame while root_position
        # places it, so rotating about the neck is a root-alpha shift and
        # translation never leaks into orientation.
        alpha[ROOT] = base.alpha[ROOT] + rotation
        alpha = np.array([wrap_angle(a) for a in alpha])

        length = base.length * scale
        length[ROOT] = math.hypot(anchor[0], anchor[1])
        poses.append(
            to_cartesian(PolarPose(alpha=alpha, length=length, root_position=anchor.copy()))
        )
    return poses
