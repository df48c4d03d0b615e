"""Shared fixtures.  The overfit fixtures train once per session and are
reused by the training, CLI, and acceptance tests."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import overfit_set  # noqa: E402

from v2c.model import ModelConfig, init_params  # noqa: E402
from v2c.train import TrainConfig, train  # noqa: E402

OVERFIT_DIM = 16
OVERFIT_STEPS = 12
OVERFIT_EPOCHS = 2000
OVERFIT_LR = 1e-4


def train_overfit(cell_kind, epochs=OVERFIT_EPOCHS, batch_size=16, seed=5):
    vocabulary, samples = overfit_set(dim=OVERFIT_DIM, n_steps=OVERFIT_STEPS)
    config = ModelConfig(cell_kind=cell_kind, hidden=64, feature_dim=OVERFIT_DIM,
                         vocab_size=len(vocabulary), n_steps=OVERFIT_STEPS, seed=seed)
    params = init_params(config)
    log = train(params, samples, TrainConfig(epochs=epochs, lr=OVERFIT_LR,
                                             batch_size=batch_size, seed=seed))
    return vocabulary, samples, params, log


@pytest.fixture(scope="session")
def overfit_lstm():
    return train_overfit("lstm")


@pytest.fixture(scope="session")
def overfit_gru():
    return train_overfit("gru")
