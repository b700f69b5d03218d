from pathlib import Path

import numpy as np
import pytest

from g2pseq import (
    G2PModel,
    LexiconEntry,
    Vocabulary,
    init_params,
)

DATA_DIR = Path(__file__).parent / "data"
TOY_LEXICON = DATA_DIR / "toy50.dict"


def tiny_model(
    n_graphemes=6, n_phonemes=6, embed_dim=4, hidden_dim=5, seed=0, dtype=np.float64
) -> G2PModel:
    """Random-weight model over single-letter vocabularies, for decode tests."""
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    graphemes = Vocabulary.build(letters[: n_graphemes - 4])
    phonemes = Vocabulary.build(f"P{i}" for i in range(n_phonemes - 4))
    params = init_params(n_graphemes, n_phonemes, embed_dim, hidden_dim,
                         seed=seed, dtype=dtype)
    return G2PModel(params, graphemes, phonemes)


def toy_entries(n=10) -> list[LexiconEntry]:
    words = ["AB", "BA", "CAB", "BAC", "ABC", "CBA", "AC", "CA", "BC", "CB"]
    sounds = {"A": "AH", "B": "B", "C": "K"}
    return [
        LexiconEntry(w, tuple(sounds[ch] for ch in w)) for w in words[:n]
    ]


@pytest.fixture(scope="session")
def toy_lexicon_path() -> Path:
    return TOY_LEXICON


@pytest.fixture(scope="session")
def memorized_model():
    """A model overfit on ten short entries; used by evaluation tests."""
    from g2pseq import DatasetSplit, TrainConfig, train

    entries = toy_entries(10)
    split = DatasetSplit(train=entries, validation=[], test=[], seed=0)
    config = TrainConfig(learning_rate=0.005, epochs=120, batch_size=10, seed=1)
    model, history = train(split, config, embed_dim=16, hidden_dim=32)
    return model, entries, history
