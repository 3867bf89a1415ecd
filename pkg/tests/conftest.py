import numpy as np
import pytest

from hefs import ConditionalSet, Dataset, synth_xor_dataset, zscore_normalize


def make_dataset(features, labels, names=None, label_values=None) -> Dataset:
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if names is None:
        names = tuple(f"f{j}" for j in range(features.shape[1]))
    if label_values is None:
        label_values = tuple(str(v) for v in range(int(labels.max()) + 1))
    return Dataset(features, labels, tuple(names), tuple(label_values))


@pytest.fixture
def dataset_factory():
    return make_dataset


@pytest.fixture(scope="session")
def xor_ds() -> Dataset:
    # 400 x 20, noise-free: f0 xor f1 decides the label, f2.. are coin flips
    return zscore_normalize(synth_xor_dataset(400, 20, 0.0, np.random.default_rng(0)))


@pytest.fixture(scope="session")
def cond_f0() -> ConditionalSet:
    return ConditionalSet((0,), "file")


@pytest.fixture(scope="session")
def perfect_ds() -> Dataset:
    # column 0 equals the label; everything else is constant and therefore
    # contributes nothing to distances after normalization
    rows = 30
    labels = np.array([i % 2 for i in range(rows)], dtype=np.int64)
    features = np.zeros((rows, 5))
    features[:, 0] = labels
    features[:, 1:] = 7.5
    return zscore_normalize(make_dataset(features, labels))
