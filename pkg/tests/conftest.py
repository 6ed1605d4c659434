"""Shared fixtures for the contour codec test suite."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from src.application import create_app
from src.config.settings import AppConfig, RateLimitConfig, SecurityConfig
from src.domain.context_tree import ContextTree, build_tst
from src.domain.geometry import AbsoluteDirection, DccContour, GridPoint
from src.domain.services import TrainingService
from src.domain.synthetic import natural_contour
from src.domain.training import TreeParams
from src.infrastructure.model_store import ModelStore, model_from_tree, save_model

FIG2_SYMBOLS = "srsllsrlrslrssrlss"
FIG3_CONTEXTS = ["l", "sll", "sls", "slr", "ss", "sr", "rl", "rs", "rr"]


@pytest.fixture
def app_config():
    """Provide test configuration."""
    return AppConfig(
        security=SecurityConfig(
            enable_auth=False,
            enable_request_signature=False,
            trusted_hosts=["*"]
        ),
        rate_limiting=RateLimitConfig(
            requests_per_minute=100,
            enabled=False
        ),
        api_key="test-api-key",
        signing_secret="test-signing-secret"
    )


@pytest.fixture
def fig2_contour():
    """The worked example contour: 18 symbols after an initial East edge."""
    return DccContour(GridPoint(10, 10), AbsoluteDirection.E, FIG2_SYMBOLS)


@pytest.fixture
def fig3_tree():
    """Worked example tree with nine contexts and no counts (uniform lookups)."""
    return ContextTree.from_contexts(FIG3_CONTEXTS, TreeParams(depth=3, budget=81))


def make_corpus(seed: int, count: int = 20, length: int = 400):
    rng = np.random.default_rng(seed)
    return [natural_contour(rng, length) for _ in range(count)]


@pytest.fixture(scope="session")
def training_contours():
    return make_corpus(seed=1)


@pytest.fixture(scope="session")
def heldout_contours():
    """Same source as the training corpus, different seed."""
    return make_corpus(seed=2, count=5)


@pytest.fixture(scope="session")
def trained_model(training_contours):
    """Model trained once per session on the natural-contour corpus."""
    return TrainingService(AppConfig()).train(training_contours)


@pytest.fixture(scope="session")
def codec_model(trained_model):
    return model_from_tree(trained_model.tree)


@pytest.fixture
def model_store(codec_model):
    store = ModelStore()
    store.set_model(codec_model)
    return store


@pytest.fixture
def model_file(tmp_path, trained_model):
    """Trained model saved to a temporary file."""
    path = tmp_path / "model.ctm"
    save_model(path, trained_model.tree)
    return path


@pytest.fixture
def fig3_tst(fig3_tree):
    return build_tst(fig3_tree)


@pytest.fixture
def client(app_config, model_store):
    """FastAPI test client with the trained model injected."""
    app = create_app(app_config, model_store=model_store)
    return TestClient(app)
