import os

# Must happen before genfl.config is imported anywhere
os.environ["GENFL_DATABASE_URL"] = "sqlite://"
os.environ.setdefault("GENFL_LOG", "error")

import logging

import numpy as np
import pytest

from genfl.database import Base, SessionLocal, engine, init_db
from genfl.schemas.dataset import LabeledDataset, Provenance
from genfl.schemas.experiment import ExperimentConfig

TINY = dict(
    seed=3,
    num_classes=4,
    feature_dim=6,
    samples_per_class=40,
    test_fraction=0.25,
    hidden_width=8,
    num_clients=6,
    clients_per_round=3,
    rounds=3,
    alpha=0.5,
    epochs=1,
    batch_size=16,
    learning_rate=0.1,
    rate_per_round=4,
    cap_per_class=10,
)


@pytest.fixture
def make_config(tmp_path):
    """Factory for small, fast configs writing under tmp_path"""
    def factory(**overrides) -> ExperimentConfig:
        values = dict(TINY, output_dir=str(tmp_path / "run"))
        values.update(overrides)
        return ExperimentConfig(**values)
    return factory


@pytest.fixture(autouse=True)
def reset_logging():
    """Drop the stderr handler main() installs so it never outlives a captured stream"""
    yield
    root = logging.getLogger()
    for handler in list(root.handlers):
        if not type(handler).__module__.startswith("_pytest"):
            root.removeHandler(handler)


@pytest.fixture
def db():
    init_db()
    session = SessionLocal()
    yield session
    session.close()
    Base.metadata.drop_all(bind=engine)


def real_dataset(features, labels, num_classes) -> LabeledDataset:
    labels = np.asarray(labels, dtype=np.int64)
    return LabeledDataset(
        np.asarray(features, dtype=np.float64),
        labels,
        np.full(labels.size, Provenance.REAL, dtype=np.uint8),
        num_classes,
    )
