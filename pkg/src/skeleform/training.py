"""Self-supervised training for body-ratio factors and pose completion.

The factor network sees a normalized pose and predicts one positive scale
per segment group through exp(raw output), so a zero network means "no
rescaling anywhere".  Training corrupts poses with known random per-group
length scales and asks the network to undo them: the L1 objective
compares original segment lengths against predicted-factor-corrected
scaled lengths, both measured in units of the original pose's mean
segment length so the loss is size-free.

The completion network maps the same encoding to all 18 normalized joint
positions and trains on randomly hidden joints, with the L1 taken over
hidden joints only.  At inference, observed joints pass through
untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .deform import GroupFactors, scale_groups
from .errors import EmptyDataset, MissingJoint, MissingNeck, ShapeError
from .mlp import (
    MlpConfig,
    MlpModel,
    TrainConfig,
    mlp_backward,
    mlp_forward,
    mlp_init,
    optimizer_step,
)
from .pose import (
    DEFAULT_TOPOLOGY,
    NUM_GROUPS,
    NUM_JOINTS,
    ROOT,
    KeypointSet,
    Topology,
    mean_segment_length,
    normalize,
    to_cartesian,
    to_polar,
)

ENCODING_DIM = NUM_JOINTS * 3  # 36 normalized coordinates + 18 visibility bits
COORD_DIM = NUM_JOINTS * 2


def default_factor_config(seed: int = 0) -> MlpConfig:
    """Five weight layers, 256-wide hidden embedding, six group outputs."""
    return MlpConfig(layer_sizes=(ENCODING_DIM, 256, 256, 256, 256, NUM_GROUPS), seed=seed)


def default_completion_config(seed: int = 0) -> MlpConfig:
    return MlpConfig(layer_sizes=(ENCODING_DIM, 256, 256, 256, 256, COORD_DIM), seed=seed)


def encode_factor_input(k: KeypointSet, topo: Topology = DEFAULT_TOPOLOGY) -> np.ndarray:
    """54-dim encoding: neck-centered, scale-free coordinates + visibility.

    Invisible joints contribute zeros in both coordinate slots and a zero
    visibility bit, so the encoding is defined for partial poses.
    """
    if k.visible[ROOT]:
        normalized, _, _ = normalize(k, topo)
        pts = normalized.points
    else:
        # Degraded fallback: center on whatever is visible.
        pts = k.points.copy()
        if k.visible.any():
            pts = pts - pts[k.visible].mean(axis=0)
        scale = mean_segment_length(k, topo)
        pts = pts / scale
        pts[~k.visible] = 0.0
    return np.concatenate([pts.reshape(-1), k.visible.astype(np.float64)])


def predict_factors(
    model: MlpModel, k: KeypointSet, topo: Topology = DEFAULT_TOPOLOGY
) -> GroupFactors:
    """Per-group factors for a pose; exp keeps them strictly positive."""
    if model.config.layer_sizes[-1] != NUM_GROUPS:
        raise ShapeError(
            f"factor model must have {NUM_GROUPS} outputs, got {model.config.layer_sizes[-1]}"
        )
    x = encode_factor_input(k, topo)
    raw, _ = mlp_forward(model, x)
    return GroupFactors(tau=np.exp(raw))


def _polar_dataset(dataset: list[KeypointSet], topo: Topology):
    """Convert once up front; trainers resample from the polar forms."""
    if len(dataset) == 0:
        raise EmptyDataset("training requires at least one pose")
    polars = []
    for i, k in enumerate(dataset):
        if not k.all_visible():
            raise MissingJoint(f"dataset pose {i} is not fully visible")
        polars.append(to_polar(k, topo))
    return polars


_NON_ROOT = [j for j in range(NUM_JOINTS) if j != ROOT]


def train_factor_model(
    dataset: list[KeypointSet],
    train_config: TrainConfig | None = None,
    model_config: MlpConfig | None = None,
    topo: Topology = DEFAULT_TOPOLOGY,
    initial_model: MlpModel | None = None,
) -> tuple[MlpModel, np.ndarray]:
    """Train the factor predictor; returns (model, per-iteration loss)."""
    tc = train_config or TrainConfig()
    mc = model_config or default_factor_config()
    if mc.layer_sizes[0] != ENCODING_DIM or mc.layer_sizes[-1] != NUM_GROUPS:
        raise ShapeError(
            f"factor model must map {ENCODING_DIM} -> {NUM_GROUPS}, got {mc.layer_sizes}"
        )
    polars = _polar_dataset(dataset, topo)
    n = len(polars)
    groups = topo.group[_NON_ROOT]
    # Original lengths in units of each pose's mean segment length.
    orig_norm = np.empty((n, len(_NON_ROOT)))
    for i, p in enumerate(polars):
        seg = p.length[_NON_ROOT]
        orig_norm[i] = seg / seg.mean()

    model = initial_model if initial_model is not None else mlp_init(mc, kind="factor")
    rng = np.random.default_rng(tc.seed)
    log_lo, log_hi = math.log(tc.scale_range[0]), math.log(tc.scale_range[1])
    state = None
    history = np.zeros(tc.iterations)

    for it in range(tc.iterations):
        idx = rng.integers(0, n, size=tc.batch_size)
        scales = np.exp(rng.uniform(log_lo, log_hi, size=(tc.batch_size, NUM_GROUPS)))
        batch_x = np.empty((tc.batch_size, ENCODING_DIM))
        for b, i in enumerate(idx):
            scaled = to_cartesian(scale_groups(polars[i], scales[b], topo), topo)
            batch_x[b] = encode_factor_input(scaled, topo)
        raw, cache = mlp_forward(model, batch_x)
        tau = np.exp(raw)  # (B, 6)

        a = orig_norm[idx]  # (B, 17) original lengths, own-mean units
        scaled_norm = a * scales[:, groups]
        # The scaled pose is measured in its own mean-length units too,
        # matching what the encoding shows the model.
        scaled_norm /= scaled_norm.mean(axis=1, keepdims=True)
        corrected = scaled_norm / tau[:, groups]
        resid = a - corrected
        history[it] = float(np.mean(np.abs(resid))) if resid.size else 0.0

        # d|a - b/tau| / d raw  =  sign(a - b/tau) * b/tau  (raw = log tau)
        per_seg = np.sign(resid) * corrected / (len(_NON_ROOT) * tc.batch_size)
        grad_raw = np.zeros_like(raw)
        for g in range(NUM_GROUPS):
            grad_raw[:, g] = per_seg[:, groups == g].sum(axis=1)
        grads, _ = mlp_backward(model, cache, grad_raw)
        model, state = optimizer_step(model, grads, state, tc)
    return model, history


@dataclass
class MaskedPose:
    """A pose with part of its joints hidden; mask is True where observed."""

    coords: np.ndarray  # (18, 2), zeroed where hidden
    mask: np.ndarray  # (18,) bool

    @staticmethod
    def from_keypoints(k: KeypointSet, mask: np.ndarray) -> "MaskedPose":
        if not mask[ROOT]:
            raise MissingNeck("the neck cannot be masked")
        coords = k.points.copy()
        coords[~mask] = 0.0
        return MaskedPose(coords=coords, mask=mask.copy())

    def to_keypoints(self) -> KeypointSet:
        return KeypointSet(points=self.coords.copy(), visible=self.mask.copy())


def train_completion_model(
    dataset: list[KeypointSet],
    train_config: TrainConfig | None = None,
    model_config: MlpConfig | None = None,
    topo: Topology = DEFAULT_TOPOLOGY,
    initial_model: MlpModel | None = None,
) -> tuple[MlpModel, np.ndarray]:
    """Train the joint-position completer; returns (model, loss history)."""
    tc = train_config or TrainConfig()
    mc = model_config or default_completion_config()
    if mc.layer_sizes[0] != ENCODING_DIM or mc.layer_sizes[-1] != COORD_DIM:
        raise ShapeError(
            f"completion model must map {ENCODING_DIM} -> {COORD_DIM}, got {mc.layer_sizes}"
        )
    _polar_dataset(dataset, topo)  # validates full visibility
    n = len(dataset)
    points = np.stack([k.points for k in dataset])  # (n, 18, 2)

    model = initial_model if initial_model is not None else mlp_init(mc, kind="completion")
    rng = np.random.default_rng(tc.seed)
    state = None
    history = np.zeros(tc.iterations)

    for it in range(tc.iterations):
        idx = rng.integers(0, n, size=tc.batch_size)
        hidden = rng.random((tc.batch_size, NUM_JOINTS)) < tc.mask_prob
        hidden[:, ROOT] = False
        batch_x = np.empty((tc.batch_size, ENCODING_DIM))
        target = np.empty((tc.batch_size, COORD_DIM))
        for b, i in enumerate(idx):
            masked = KeypointSet(points=points[i].copy(), visible=~hidden[b])
            normalized, scale, offset = normalize(masked, topo)
            batch_x[b] = np.concatenate(
                [normalized.points.reshape(-1), normalized.visible.astype(np.float64)]
            )
            target[b] = ((points[i] - offset) / scale).reshape(-1)
        pred, cache = mlp_forward(model, batch_x)

        coord_hidden = np.repeat(hidden, 2, axis=1)  # (B, 36)
        counts = np.maximum(coord_hidden.sum(axis=1), 1)  # per-sample masked coords
        resid = (pred - target) * coord_hidden
        per_sample = np.abs(resid).sum(axis=1) / counts
        history[it] = float(per_sample.mean())
        grad = np.sign(resid) * coord_hidden / counts[:, None] / tc.batch_size
        grads, _ = mlp_backward(model, cache, grad)
        model, state = optimizer_step(model, grads, state, tc)
    return model, history


def complete_pose(
    model: MlpModel, k: KeypointSet, topo: Topology = DEFAULT_TOPOLOGY
) -> KeypointSet:
    """Fill invisible joints with predictions; observed joints pass through."""
    if model.config.layer_sizes[-1] != COORD_DIM:
        raise ShapeError(
            f"completion model must have {COORD_DIM} outputs, got {model.config.layer_sizes[-1]}"
        )
    if not k.visible[ROOT]:
        raise MissingNeck("completion needs a visible neck")
    if k.all_visible():
        return k.copy()
    normalized, scale, offset = normalize(k, topo)
    x = np.concatenate([normalized.points.reshape(-1), normalized.visible.astype(np.float64)])
    pred, _ = mlp_forward(model, x)
    filled = pred.reshape(NUM_JOINTS, 2) * scale + offset
    out = k.points.copy()
    out[~k.visible] = filled[~k.visible]
    return KeypointSet(points=out, visible=np.ones(NUM_JOINTS, dtype=bool))
