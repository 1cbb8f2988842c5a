import numpy as np
import pytest

from sslstm.embeddings import EmbeddingTable
from sslstm.text_norm import default_lexicon


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


def make_table(name, vocab, dim=None, seed=0):
    """Embedding table with seeded random unit-scale vectors."""
    rng = np.random.default_rng(seed)
    dim = dim or 4
    vectors = {tok: rng.standard_normal(dim) for tok in vocab}
    return EmbeddingTable(dim=dim, vectors=vectors, name=name)


@pytest.fixture
def tiny_tables():
    vocab = ["good", "bad", "mad", "meh", "a", "b", "c", ":)", ":(", ">:(", ":|"]
    return (
        make_table("semantic", vocab, dim=5, seed=11),
        make_table("sentiment", vocab, dim=3, seed=22),
    )
