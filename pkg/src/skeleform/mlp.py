"""Small fully connected network with explicit reverse-mode gradients.

Everything here is plain float64 numpy: seeded uniform initialization,
forward with a cache, exact backward, SGD and Adam steps, and a central
finite-difference checker that the gradient tests and the CLI reuse.
Batched inputs are rows of a 2-D array; a 1-D input means one sample.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SchemaError, ShapeError, VersionError

ACTIVATIONS = ("relu", "tanh")
OPTIMIZERS = ("sgd", "adam")
MODEL_KINDS = ("factor", "completion")
MODEL_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    """Architecture: layer sizes input..output, hidden activation, init seed."""

    layer_sizes: tuple[int, ...]
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s <= 0 for s in sizes):
            raise SchemaError(f"layer_sizes must be >= 2 positive entries, got {sizes}")
        if self.activation not in ACTIVATIONS:
            raise SchemaError(f"activation must be one of {ACTIVATIONS}")
        object.__setattr__(self, "layer_sizes", sizes)


@dataclass
class MlpModel:
    config: MlpConfig
    weights: list[np.ndarray]  # weights[l] has shape (out_l, in_l)
    biases: list[np.ndarray]  # biases[l] has shape (out_l,)
    kind: str = "factor"
    version: int = MODEL_VERSION


@dataclass
class MlpCache:
    """Forward intermediates needed by backward."""

    layer_inputs: list[np.ndarray]  # input to each layer, batch-major
    pre_activations: list[np.ndarray]
    squeeze: bool  # the caller passed a single sample


@dataclass
class TrainConfig:
    """Optimization and task hyperparameters shared by both trainers."""

    iterations: int = 4000
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    scale_range: tuple[float, float] = (0.5, 2.0)
    mask_prob: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0 or self.batch_size <= 0:
            raise SchemaError("iterations must be >= 0 and batch_size > 0")
        if self.learning_rate <= 0.0:
            raise SchemaError("learning_rate must be > 0")
        if self.optimizer not in OPTIMIZERS:
            raise SchemaError(f"optimizer must be one of {OPTIMIZERS}")
        lo, hi = self.scale_range
        if not (0.0 < lo <= hi) or not math.isfinite(hi):
            raise SchemaError(f"scale_range must satisfy 0 < lo <= hi, got {self.scale_range}")
        if not 0.0 <= self.mask_prob < 1.0:
            raise SchemaError(f"mask_prob must be in [0, 1), got {self.mask_prob}")


def mlp_init(config: MlpConfig, kind: str = "factor") -> MlpModel:
    """Seeded init: weights uniform +-sqrt(6/(fan_in+fan_out)), biases zero."""
    rng = np.random.default_rng(config.seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(config.layer_sizes[:-1], config.layer_sizes[1:]):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(config=config, weights=weights, biases=biases, kind=kind)


def _promote(x: np.ndarray, expected: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
        squeeze = True
    elif arr.ndim == 2:
        squeeze = False
    else:
        raise ShapeError(f"input must be 1-D or 2-D, got ndim={arr.ndim}")
    if arr.shape[1] != expected:
        raise ShapeError(f"input size {arr.shape[1]} != model input size {expected}")
    return arr, squeeze


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def mlp_forward(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, MlpCache]:
    """Apply the network; the activation acts on hidden layers only."""
    a, squeeze = _promote(x, model.config.layer_sizes[0])
    layer_inputs = [a]
    pre_activations = []
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T + b
        pre_activations.append(z)
        a = z if l == last else _activate(z, model.config.activation)
        if l != last:
            layer_inputs.append(a)
    cache = MlpCache(layer_inputs, pre_activations, squeeze)
    return (a[0] if squeeze else a), cache


def mlp_backward(
    model: MlpModel, cache: MlpCache, grad_output: np.ndarray
) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Gradients of sum(output * grad_output) for all weights and the input.

    Returns (per-layer (dW, db) list, gradient with respect to the input).
    Batched rows accumulate into the weight gradients.
    """
    g = np.asarray(grad_output, dtype=np.float64)
    if cache.squeeze:
        if g.shape != (model.config.layer_sizes[-1],):
            raise ShapeError(f"grad_output shape {g.shape} does not match the output")
        g = g[None, :]
    elif g.shape != cache.pre_activations[-1].shape:
        raise ShapeError(f"grad_output shape {g.shape} does not match the output")

    act = model.config.activation
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.weights)
    delta = g
    for l in range(len(model.weights) - 1, -1, -1):
        grads[l] = (delta.T @ cache.layer_inputs[l], delta.sum(axis=0))
        delta = delta @ model.weights[l]
        if l > 0:
            if act == "relu":
                delta = delta * (cache.pre_activations[l - 1] > 0.0)
            else:
                a = cache.layer_inputs[l]  # tanh output saved by forward
                delta = delta * (1.0 - a * a)
    grad_input = delta[0] if cache.squeeze else delta
    return grads, grad_input


@dataclass
class OptimizerState:
    step: int = 0
    m: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    v: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)


def optimizer_step(
    model: MlpModel,
    grads: list[tuple[np.ndarray, np.ndarray]],
    state: OptimizerState | None,
    config: TrainConfig,
) -> tuple[MlpModel, OptimizerState]:
    """One parameter update; returns a new model and advanced state."""
    if len(grads) != len(model.weights):
        raise ShapeError("gradient list length does not match the model")
    if state is None:
        state = OptimizerState()
    lr = config.learning_rate
    new_w, new_b = [], []
    if config.optimizer == "sgd":
        for (w, b), (dw, db) in zip(zip(model.weights, model.biases), grads):
            new_w.append(w - lr * dw)
            new_b.append(b - lr * db)
        new_state = OptimizerState(step=state.step + 1)
    else:
        if not state.m:
            state.m = [(np.zeros_like(w), np.zeros_like(b))
                       for w, b in zip(model.weights, model.biases)]
            state.v = [(np.zeros_like(w), np.zeros_like(b))
                       for w, b in zip(model.weights, model.biases)]
        t = state.step + 1
        b1, b2, eps = config.beta1, config.beta2, config.adam_eps
        corr1 = 1.0 - b1**t
        corr2 = 1.0 - b2**t
        m_out, v_out = [], []
        for (w, b), (dw, db), (mw, mb), (vw, vb) in zip(
            zip(model.weights, model.biases), grads, state.m, state.v
        ):
            mw = b1 * mw + (1.0 - b1) * dw
            mb = b1 * mb + (1.0 - b1) * db
            vw = b2 * vw + (1.0 - b2) * dw * dw
            vb = b2 * vb + (1.0 - b2) * db * db
            new_w.append(w - lr * (mw / corr1) / (np.sqrt(vw / corr2) + eps))
            new_b.append(b - lr * (mb / corr1) / (np.sqrt(vb / corr2) + eps))
            m_out.append((mw, mb))
            v_out.append((vw, vb))
        new_state = OptimizerState(step=t, m=m_out, v=v_out)
    out = MlpModel(config=model.config, weights=new_w, biases=new_b,
                   kind=model.kind, version=model.version)
    return out, new_state


def grad_check(model: MlpModel, x: np.ndarray, eps: float = 1e-5) -> float:
    """Worst relative error of backward vs central differences.

    The checked scalar is the sum of all outputs; every weight and bias
    entry is perturbed by +-eps.
    """
    if eps <= 0.0:
        raise ValueError("eps must be > 0")
    out, cache = mlp_forward(model, x)
    grads, _ = mlp_backward(model, cache, np.ones_like(out))

    worst = 0.0
    for l in range(len(model.weights)):
        for arrs, analytic in ((model.weights, grads[l][0]), (model.biases, grads[l][1])):
            arr = arrs[l]
            flat = arr.reshape(-1)
            ana = analytic.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                hi = float(np.sum(mlp_forward(model, x)[0]))
                flat[i] = orig - eps
                lo = float(np.sum(mlp_forward(model, x)[0]))
                flat[i] = orig
                numeric = (hi - lo) / (2.0 * eps)
                err = abs(ana[i] - numeric) / max(abs(ana[i]), abs(numeric), 1e-8)
                worst = max(worst, err)
    return worst


def _sig9(x: float) -> float:
    return float(f"{x:.9g}")


def save_model(model: MlpModel) -> str:
    """Serialize to the versioned JSON model format (9 significant digits)."""
    layers = []
    for w, b in zip(model.weights, model.biases):
        layers.append(
            {
                "w": [[_sig9(v) for v in row] for row in w.tolist()],
                "b": [_sig9(v) for v in b.tolist()],
            }
        )
    return json.dumps(
        {
            "version": model.version,
            "kind": model.kind,
            "layer_sizes": list(model.config.layer_sizes),
            "activation": model.config.activation,
            "weights": layers,
        }
    )


def load_model(data: bytes | str) -> MlpModel:
    """Parse and validate a serialized model."""
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="strict")
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"malformed model file: {e}") from e
    if not isinstance(obj, dict):
        raise SchemaError("model file must be a JSON object")
    if obj.get("version") != MODEL_VERSION:
        raise VersionError(f"unsupported model version {obj.get('version')!r}")
    kind = obj.get("kind")
    if kind not in MODEL_KINDS:
        raise SchemaError(f"kind must be one of {MODEL_KINDS}, got {kind!r}")
    sizes = obj.get("layer_sizes")
    if not isinstance(sizes, list) or len(sizes) < 2:
        raise SchemaError("layer_sizes must be a list of at least two sizes")
    config = MlpConfig(layer_sizes=tuple(sizes), activation=obj.get("activation", ""))
    raw_layers = obj.get("weights")
    if not isinstance(raw_layers, list) or len(raw_layers) != len(sizes) - 1:
        raise SchemaError(f"expected {len(sizes) - 1} weight layers")
    weights, biases = [], []
    for l, raw in enumerate(raw_layers):
        if not isinstance(raw, dict):
            raise SchemaError(f"weights[{l}] must be an object")
        try:
            w = np.asarray(raw["w"], dtype=np.float64)
            b = np.asarray(raw["b"], dtype=np.float64)
        except (KeyError, ValueError) as e:
            raise SchemaError(f"weights[{l}] is malformed: {e}") from e
        if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
            raise SchemaError(
                f"weights[{l}] shape {w.shape}/{b.shape} does not match "
                f"layer_sizes {sizes[l]}->{sizes[l + 1]}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise SchemaError(f"weights[{l}] contains non-finite values")
        weights.append(w)
        biases.append(b)
    return MlpModel(config=config, weights=weights, biases=biases, kind=kind)
