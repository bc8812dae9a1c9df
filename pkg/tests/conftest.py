import pytest

from ecmirror.ensemble import (
    GbtHyperparams,
    MlpHyperparams,
    StackingHyperparams,
    stack_fit,
)
from ecmirror.synth import SyntheticDatasetSpec, generate_dataset

FAST_STACK = StackingHyperparams(
    gbt=GbtHyperparams(n_estimators=20),
    mlp=MlpHyperparams(hidden_layer_sizes=(16,), max_epochs=400, seed=0),
)


@pytest.fixture(scope="session")
def trained_model():
    """A small but usable voltage predictor shared across test modules."""
    X, y = generate_dataset(SyntheticDatasetSpec(n_samples=400, seed=101, noise_sd=0.05))
    return stack_fit(X, y, FAST_STACK)
