import numpy as np
import pytest

from jointrec import Dataset, LabelVocabulary, Sample

EMOTIONS = ("calm", "glad", "mad")
INTENTS = ("ask", "tell")
DIMS = {"audio": 4, "video": 3, "text": 2}


def make_sample(sid, emotion, intent, *, split="train", origin="original",
                dims=DIMS, length=3, seed=0):
    rng = np.random.default_rng(seed)
    feats = {mod: rng.normal(size=(length, d)).astype(np.float32)
             for mod, d in dims.items()}
    return Sample(id=sid, features=feats, emotion=emotion, intent=intent,
                  split=split, origin=origin)


def make_dataset(n_train=8, n_val=4, n_test=4, dims=DIMS, seed=0):
    """Small random dataset covering all three splits."""
    rng = np.random.default_rng(seed)
    samples = []
    counter = 0
    for split, n in (("train", n_train), ("val", n_val), ("test", n_test)):
        for _ in range(n):
            length = int(rng.integers(2, 6))
            feats = {mod: rng.normal(size=(length, d)).astype(np.float32)
                     for mod, d in dims.items()}
            samples.append(Sample(
                id=f"s{counter:04d}", features=feats,
                emotion=int(rng.integers(len(EMOTIONS))),
                intent=int(rng.integers(len(INTENTS))),
                split=split))
            counter += 1
    return Dataset(samples, LabelVocabulary(EMOTIONS, INTENTS))


@pytest.fixture
def dataset():
    return make_dataset()
