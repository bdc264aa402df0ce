"""Shared fixtures.

The two training runs are expensive (seconds, not milliseconds), so they
execute once per session and every test that needs a trained model reuses
them.  Both are fully seeded: every number they produce is reproducible.
"""
import time
from dataclasses import dataclass

import numpy as np
import pytest

from skeleform.mlp import MlpModel, TrainConfig, save_model
from skeleform.synth import synth_dataset
from skeleform.training import (
    default_completion_config,
    default_factor_config,
    train_completion_model,
    train_factor_model,
)

TRAIN_SEED = 11
HELD_OUT_SEED = 12
COMPLETION_ITERATIONS = 1200


@dataclass
class TrainingRun:
    model: MlpModel
    history: np.ndarray
    seconds: float


@pytest.fixture(scope="session")
def train_set():
    return synth_dataset(2000, seed=TRAIN_SEED)


@pytest.fixture(scope="session")
def held_out():
    return synth_dataset(200, seed=HELD_OUT_SEED)


@pytest.fixture(scope="session")
def factor_run(train_set) -> TrainingRun:
    start = time.perf_counter()
    model, history = train_factor_model(
        train_set,
        train_config=TrainConfig(),
        model_config=default_factor_config(),
    )
    return TrainingRun(model, history, time.perf_counter() - start)


@pytest.fixture(scope="session")
def completion_run(train_set) -> TrainingRun:
    start = time.perf_counter()
    model, history = train_completion_model(
        train_set,
        train_config=TrainConfig(iterations=COMPLETION_ITERATIONS),
        model_config=default_completion_config(),
    )
    return TrainingRun(model, history, time.perf_counter() - start)


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory, factor_run, completion_run):
    """Both trained models saved to disk, for CLI and service tests."""
    d = tmp_path_factory.mktemp("models")
    (d / "factor.json").write_text(save_model(factor_run.model))
    (d / "completion.json").write_text(save_model(completion_run.model))
    return d
