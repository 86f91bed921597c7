"""Shared fixtures: the bundled CSV corpus, a separable synthetic token
dataset, and a micro experiment config sized for fast runs."""

from pathlib import Path

import numpy as np
import pytest

from slimrnn import ExperimentConfig, LabeledDataset, Rng

FIXTURE_CSV = Path(__file__).parent / "data" / "fixture_tweets.csv"

POSITIVE_TOKENS = (1, 2, 3, 4, 5)
NEGATIVE_TOKENS = (6, 7, 8, 9, 10)


def make_separable_dataset(total: int = 36, maxlen: int = 8,
                           seed: int = 7) -> LabeledDataset:
    """Alternating labels; each class draws tokens from its own disjoint pool,
    so any model with a working pipeline can fit it perfectly."""
    rng = Rng(seed)
    rows, labels = [], []
    for k in range(total):
        y = k % 2
        pool = POSITIVE_TOKENS if y else NEGATIVE_TOKENS
        length = 3 + int(rng.uniform(()) * (maxlen - 3))
        row = np.zeros(maxlen, dtype=np.int64)
        row[-length:] = [pool[int(rng.uniform(()) * len(pool))] for _ in range(length)]
        rows.append(row)
        labels.append(y)
    return LabeledDataset(np.stack(rows), np.array(labels, dtype=np.int64))


MICRO_DEFAULTS = dict(
    seed=11,
    optimizer="adam",
    lr=0.01,
    batch_size=8,
    epochs=2,
    split_ratio=0.25,
    vocab_size=40,
    embed_dim=6,
    conv_filters=4,
    kernel_size=3,
    pool_size=2,
    hidden=4,
    maxlen=8,
    spatial_dropout=0.0,
    dense_dropout=0.0,
)


def micro_config(**overrides) -> ExperimentConfig:
    return ExperimentConfig(**{**MICRO_DEFAULTS, **overrides})


@pytest.fixture
def fixture_csv() -> str:
    return str(FIXTURE_CSV)


@pytest.fixture
def separable_dataset() -> LabeledDataset:
    return make_separable_dataset()
