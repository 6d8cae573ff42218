import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stredit import Alphabet, EditOp, Transducer


@pytest.fixture
def ab_uniform():
    """The four-event uniform model over A={a}, B={b}."""
    return Transducer.uniform(Alphabet(["a"]), Alphabet(["b"]))


@pytest.fixture
def abc_alphabets():
    return Alphabet(["a", "b"]), Alphabet(["c"])


@pytest.fixture
def abb_cc_model(abc_alphabets):
    """Deterministic single-alignment model for the pair (abb, cc)."""
    A, B = abc_alphabets
    return Transducer.from_probabilities(
        A, B, {EditOp("a", None): 0.25, EditOp("b", "c"): 0.5}, termination=0.25
    )


def random_strings(rng, alphabet, max_length, count):
    out = []
    for _ in range(count):
        length = int(rng.integers(0, max_length + 1))
        out.append(tuple(alphabet[int(i)] for i in rng.integers(0, len(alphabet), size=length)))
    return out


def random_alphabet_pair(rng, max_size=3):
    letters = "abcdefg"
    na = int(rng.integers(1, max_size + 1))
    nb = int(rng.integers(1, max_size + 1))
    # overlapping symbol sets, so identity substitutions can occur
    return Alphabet(letters[:na]), Alphabet(letters[:nb])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
