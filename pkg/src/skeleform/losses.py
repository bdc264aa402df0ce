"""Stylization loss kernels with analytic gradients.

Images and feature maps are float64 arrays shaped (C, H, W).  Every
kernel returns (value, gradient) so training loops never need numeric
differentiation; the tests check the analytic forms against central
differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaError, ShapeError


def _as_tensor(x: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"{name} must be (C, H, W), got shape {arr.shape}")
    return arr


def l1_loss(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean absolute difference and its gradient with respect to ``a``.

    sign(0) is 0, so exact ties contribute no gradient.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    value = float(np.mean(np.abs(diff)))
    grad = np.sign(diff) / a.size
    return value, grad


def gram(f: np.ndarray) -> np.ndarray:
    """(C, C) channel co-occurrence matrix, normalized by C*H*W."""
    f = _as_tensor(f, "feature map")
    c, h, w = f.shape
    flat = f.reshape(c, h * w)
    return (flat @ flat.T) / float(c * h * w)


def style_loss(
    fa: list[np.ndarray], fb: list[np.ndarray]
) -> tuple[float, list[np.ndarray]]:
    """Sum of squared Frobenius distances between per-layer gram matrices.

    Returns the value and the gradient with respect to every layer of
    ``fa``.  Layers must agree in channel count; spatial sizes may vary.
    """
    if len(fa) != len(fb):
        raise ShapeError(f"layer count mismatch: {len(fa)} vs {len(fb)}")
    value = 0.0
    grads = []
    for i, (a, b) in enumerate(zip(fa, fb)):
        a = _as_tensor(a, f"fa[{i}]")
        b = _as_tensor(b, f"fb[{i}]")
        if a.shape[0] != b.shape[0]:
            raise ShapeError(f"layer {i} channel mismatch: {a.shape[0]} vs {b.shape[0]}")
        ga = gram(a)
        gb = gram(b)
        delta = ga - gb
        value += float(np.sum(delta * delta))
        c, h, w = a.shape
        n = float(c * h * w)
        flat = a.reshape(c, h * w)
        grads.append(((4.0 / n) * (delta @ flat)).reshape(a.shape))
    return value, grads


class ChannelMeanEmbedder:
    """Embeds a tensor as its per-channel spatial mean."""

    def __call__(self, f: np.ndarray) -> np.ndarray:
        f = _as_tensor(f, "input")
        return f.mean(axis=(1, 2))


class RandomProjectionEmbedder:
    """Fixed seeded Gaussian projection of the flattened tensor.

    The projection matrix is generated deterministically per input shape,
    so equal shapes always share a matrix and the output dimension never
    varies.
    """

    def __init__(self, dim: int = 32, seed: int = 0):
        if dim <= 0:
            raise SchemaError(f"embedding dim must be > 0, got {dim}")
        self.dim = dim
        self.seed = seed
        self._matrices: dict[tuple[int, int, int], np.ndarray] = {}

    def _matrix(self, shape: tuple[int, int, int]) -> np.ndarray:
        if shape not in self._matrices:
            rng = np.random.default_rng([self.seed, *shape])
            size = shape[0] * shape[1] * shape[2]
            self._matrices[shape] = rng.standard_normal((self.dim, size)) / np.sqrt(size)
        return self._matrices[shape]

    def __call__(self, f: np.ndarray) -> np.ndarray:
        f = _as_tensor(f, "input")
        return self._matrix(f.shape) @ f.reshape(-1)


def embedding_l1(embedder, a: np.ndarray, b: np.ndarray) -> float:
    """Sum of absolute differences between two embeddings."""
    ea = np.asarray(embedder(a), dtype=np.float64)
    eb = np.asarray(embedder(b), dtype=np.float64)
    if ea.shape != eb.shape:
        raise ShapeError(f"embedding shape mismatch: {ea.shape} vs {eb.shape}")
    return float(np.sum(np.abs(ea - eb)))


@dataclass(frozen=True)
class LossWeights:
    """Weights of the combined objective; defaults favor reconstruction."""

    lambda_l1: float = 200.0
    lambda_face: float = 1.0
    lambda_r: float = 1.0

    def __post_init__(self):
        for name in ("lambda_l1", "lambda_face", "lambda_r"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise SchemaError(f"{name} must be finite and >= 0, got {v}")


def total_objective(
    l1: float, face: float, r: float, weights: LossWeights | None = None
) -> float:
    w = weights or LossWeights()
    return w.lambda_l1 * l1 + w.lambda_face * face + w.lambda_r * r


def average_pool(f: np.ndarray) -> np.ndarray:
    """2x2 mean pooling; spatial dimensions must be even."""
    f = _as_tensor(f, "input")
    c, h, w = f.shape
    if h % 2 or w % 2:
        raise ShapeError(f"spatial size must be even for 2x pooling, got {h}x{w}")
    return f.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))


TOY_CHANNELS = 8


def _toy_kernel(level: int, c_in: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, level, c_in])
    return rng.standard_normal((TOY_CHANNELS, c_in, 3, 3)) / np.sqrt(9.0 * c_in)


def _conv3x3(f: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    c, h, w = f.shape
    padded = np.zeros((c, h + 2, w + 2))
    padded[:, 1:-1, 1:-1] = f
    out = np.zeros((kernel.shape[0], h, w))
    for dy in range(3):
        for dx in range(3):
            out += np.tensordot(kernel[:, :, dy, dx], padded[:, dy:dy + h, dx:dx + w], axes=1)
    return out


def toy_features(img: np.ndarray, levels: int, seed: int = 0) -> list[np.ndarray]:
    """Deterministic multi-scale features standing in for a real backbone.

    Each level halves the spatial size with 2x2 mean pooling and mixes
    channels with a fixed seeded 3x3 convolution.  Level l has spatial
    size (H / 2^l, W / 2^l); H and W must be divisible by 2^levels.
    """
    img = _as_tensor(img, "image")
    if levels < 1:
        raise ShapeError(f"levels must be >= 1, got {levels}")
    _, h, w = img.shape
    if h % (1 << levels) or w % (1 << levels):
        raise ShapeError(
            f"spatial size {h}x{w} is not divisible by 2^{levels}"
        )
    out = []
    current = img
    for level in range(1, levels + 1):
        pooled = average_pool(current)
        current = _conv3x3(pooled, _toy_kernel(level, pooled.shape[0], seed))
        out.append(current)
    return out


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a (C, H, W) tensor file.

    The file is a JSON header with "shape" and "dtype"; small tensors may
    inline values under "data", otherwise a sibling .bin holds row-major
    little-endian values.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed tensor header: {e.msg}", detail=f"offset {e.pos}") from e
    if not isinstance(obj, dict):
        raise SchemaError("tensor header must be a JSON object")
    shape = obj.get("shape")
    if (
        not isinstance(shape, list)
        or len(shape) != 3
        or not all(isinstance(s, int) and s > 0 for s in shape)
    ):
        raise SchemaError(f"shape must be three positive integers, got {shape!r}")
    dtype = obj.get("dtype", "f32")
    if dtype != "f32":
        raise SchemaError(f"unsupported dtype {dtype!r}")
    count = shape[0] * shape[1] * shape[2]
    if "data" in obj:
        data = np.asarray(obj["data"], dtype=np.float64)
        if data.size != count:
            raise SchemaError(f"data holds {data.size} values, shape needs {count}")
        return data.reshape(shape)
    binary = path.with_suffix(".bin")
    try:
        raw = binary.read_bytes()
    except OSError as e:
        raise ParseError(f"cannot read {binary}: {e}") from e
    if len(raw) != 4 * count:
        raise SchemaError(f"{binary.name} holds {len(raw)} bytes, expected {4 * count}")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)


def write_tensor(path: str | Path, tensor: np.ndarray, inline: bool = True) -> None:
    """Write a tensor in the format read_tensor understands."""
    tensor = _as_tensor(tensor, "tensor")
    path = Path(path)
    header: dict = {"shape": list(tensor.shape), "dtype": "f32"}
    if inline:
        header["data"] = tensor.astype("<f4").astype(np.float64).reshape(-1).tolist()
        path.write_text(json.dumps(header))
    else:
        path.write_text(json.dumps(header))
        path.with_suffix(".bin").write_bytes(tensor.astype("<f4").tobytes())
