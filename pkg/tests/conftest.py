"""Shared fixtures: small synthetic traces and pre-trained models.

Heavy objects are session-scoped so the suite stays fast; tests must not
mutate them.
"""

import numpy as np
import pytest

from opptrans.features import training_set
from opptrans.forest import ForestRatePredictor
from opptrans.residual import fit_residual_model
from opptrans.trace import SyntheticConfig, generate_synthetic_trace


@pytest.fixture(scope="session")
def small_trace():
    return generate_synthetic_trace(
        SyntheticConfig(duration_s=200.0, n_hotspots=3), seed=42)


@pytest.fixture(scope="session")
def trace_pair():
    cfg = SyntheticConfig(duration_s=300.0, n_hotspots=4)
    return [generate_synthetic_trace(cfg, seed=s) for s in (11, 12)]


@pytest.fixture(scope="session")
def trained_stack(trace_pair):
    """(encoder, X, y, predictor, residual model) on the shared trace pair."""
    encoder, X, y = training_set(trace_pair)
    predictor = ForestRatePredictor(n_trees=10, max_depth=8, seed=5).fit(X, y)
    residual = fit_residual_model(predictor.predict(X), y, length_scale=2.0,
                                  sigma_f=1.0, sigma_n=0.1, max_pairs=300,
                                  seed=5)
    return encoder, X, y, predictor, residual


@pytest.fixture()
def rng():
    return np.random.default_rng(123)
