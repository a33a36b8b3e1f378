import numpy as np
import pytest

from leafcnn import dataset


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A 3-class, 12-images-per-class synthetic corpus shared across tests."""
    root = tmp_path_factory.mktemp("corpus")
    spec = dataset.SyntheticSpec(num_classes=3, images_per_class=12, height=16, width=16, seed=11)
    manifest = dataset.generate_synthetic_corpus(spec, root)
    return root, manifest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
