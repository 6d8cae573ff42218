"""Synthetic benchmark data for the classification experiments.

The generator builds a desk-scale analogue of a pronunciation
recognition task: a weighted lexicon of prototype forms for a set of
word classes, and labeled surface samples produced by passing prototypes
through a noisy channel.

Structure, in order of construction:

* Word priors follow a Zipf law, so words differ strongly in frequency.
* Prototype forms are mutations of a small pool of root strings, which
  makes different words' forms confusable.
* A slice of the words share their primary form with another word
  (homophones), so exact matching alone cannot separate them.
* Words may carry extra variant forms; most are near mutations of the
  primary form, a few are unrelated strings, mirroring dissimilar
  alternative pronunciations.
* The channel deletes or substitutes each symbol and inserts into each
  gap independently.  Substitutions move to a ring neighbor of the
  symbol, structure a unit-cost distance cannot see but a trained model
  can.

The ground-truth channel is also exported as a flat edit model whose
probabilities match the channel's expected operation frequencies, for
oracle-style comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .alphabet import Alphabet
from .classifier import Lexicon
from .errors import ConfigurationError
from .transducer import Transducer, _as_rng


@dataclass(frozen=True)
class BenchmarkConfig:
    """Knobs for the synthetic benchmark generator."""

    n_classes: int = 50
    alphabet_size: int = 10
    min_length: int = 5
    max_length: int = 10
    substitution_rate: float = 0.10
    insertion_rate: float = 0.05
    deletion_rate: float = 0.05
    n_train: int = 5000
    n_test: int = 500
    seed: int = 0
    # structural knobs; defaults tuned for a clear trained-vs-unit-cost gap
    n_roots: int = 8
    shared_form_fraction: float = 0.44
    zipf_exponent: float = 1.1
    unrelated_variant_rate: float = 0.2
    primary_form_weight: float = 0.7

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ConfigurationError("need at least two classes")
        if not 2 <= self.alphabet_size <= 26:
            raise ConfigurationError("alphabet size must lie in [2, 26]")
        if not 1 <= self.min_length <= self.max_length:
            raise ConfigurationError("bad prototype length range")
        rates = (self.substitution_rate, self.insertion_rate, self.deletion_rate)
        if any(r < 0 for r in rates) or self.substitution_rate + self.deletion_rate > 1:
            raise ConfigurationError("bad channel rates")
        if self.n_train < 1 or self.n_test < 1:
            raise ConfigurationError("corpus sizes must be positive")


@dataclass
class Benchmark:
    """Generated benchmark data plus its ground truth."""

    config: BenchmarkConfig
    source_alphabet: Alphabet
    target_alphabet: Alphabet
    lexicon: Lexicon
    train: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    test: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    channel: Transducer | None = None


def _random_form(rng, symbols, min_length, max_length):
    length = int(rng.integers(min_length, max_length + 1))
    return tuple(symbols[int(i)] for i in rng.integers(0, len(symbols), size=length))


def _mutate(rng, symbols, form, n_edits):
    form = list(form)
    for _ in range(n_edits):
        position = int(rng.integers(0, len(form)))
        current = form[position]
        while form[position] == current:
            form[position] = symbols[int(rng.integers(0, len(symbols)))]
    return tuple(form)


def corrupt(
    form: Sequence[str], config: BenchmarkConfig, alphabet: Alphabet, rng
) -> tuple[str, ...]:
    """Pass one string through the noisy channel.

    Each gap (before every symbol and at the end) receives an inserted
    uniform-random symbol with the insertion rate; each symbol is
    deleted with the deletion rate, replaced by one of its two ring
    neighbors with the substitution rate, and kept otherwise.
    """
    symbols = alphabet.symbols
    n = len(symbols)
    out: list[str] = []
    for token in form:
        if rng.random() < config.insertion_rate:
            out.append(symbols[int(rng.integers(0, n))])
        r = rng.random()
        if r < config.deletion_rate:
            continue
        if r < config.deletion_rate + config.substitution_rate:
            index = alphabet.index(token)
            step = 1 if rng.random() < 0.5 else -1
            out.append(symbols[(index + step) % n])
        else:
            out.append(token)
    if rng.random() < config.insertion_rate:
        out.append(symbols[int(rng.integers(0, n))])
    return tuple(out)


def channel_transducer(config: BenchmarkConfig, alphabet: Alphabet) -> Transducer:
    """The channel expressed as a flat edit model.

    Edit probabilities are proportional to the channel's expected
    per-pair operation counts at the mean prototype length, with the end
    marker claiming one count per pair.
    """
    n = len(alphabet)
    mean_length = (config.min_length + config.max_length) / 2.0
    keep = 1.0 - config.deletion_rate - config.substitution_rate
    symbol_counts = mean_length / n
    insert_counts = (mean_length + 1.0) * config.insertion_rate / n
    sub = np.zeros((n, n))
    for i in range(n):
        sub[i, i] = symbol_counts * keep
        sub[i, (i + 1) % n] += symbol_counts * config.substitution_rate / 2.0
        sub[i, (i - 1) % n] += symbol_counts * config.substitution_rate / 2.0
    dele = np.full(n, symbol_counts * config.deletion_rate)
    ins = np.full(n, insert_counts)
    total = sub.sum() + dele.sum() + ins.sum() + 1.0
    with np.errstate(divide="ignore"):
        return Transducer(
            alphabet,
            alphabet,
            np.log(sub / total),
            np.log(dele / total),
            np.log(ins / total),
            math.log(1.0 / total),
        )


def generate_benchmark(config: BenchmarkConfig | None = None) -> Benchmark:
    """Build the full benchmark: lexicon, corpora, and channel truth."""
    config = config or BenchmarkConfig()
    rng = _as_rng(config.seed)
    letters = "abcdefghijklmnopqrstuvwxyz"
    alphabet = Alphabet(letters[: config.alphabet_size])
    symbols = alphabet.symbols

    words = [f"w{i:02d}" for i in range(config.n_classes)]
    ranks = np.arange(1, config.n_classes + 1, dtype=float)
    priors = ranks ** (-config.zipf_exponent)
    priors /= priors.sum()

    roots = [
        _random_form(rng, symbols, config.min_length, config.max_length)
        for _ in range(config.n_roots)
    ]

    # primary forms: a pool smaller than the class count, so the last
    # classes reuse the first classes' forms and become homophones
    pool_size = max(2, round(config.n_classes * (1.0 - config.shared_form_fraction)))
    pool: list[tuple[str, ...]] = []
    taken = set()
    for i in range(pool_size):
        while True:
            form = _mutate(rng, symbols, roots[i % config.n_roots], 1 + (i % 2))
            if form not in taken:
                taken.add(form)
                pool.append(form)
                break

    forms_of: dict[str, list[tuple[tuple[str, ...], float]]] = {}
    for i, word in enumerate(words):
        primary = pool[i % pool_size]
        variants: list[tuple[str, ...]] = []
        n_variants = int(rng.choice([0, 1, 2], p=[0.3, 0.5, 0.2]))
        attempts = 0
        while len(variants) < n_variants and attempts < 50:
            attempts += 1
            if rng.random() < config.unrelated_variant_rate:
                candidate = _random_form(rng, symbols, config.min_length, config.max_length)
            else:
                candidate = _mutate(rng, symbols, primary, 1 + int(rng.integers(0, 2)))
            if candidate != primary and candidate not in variants:
                variants.append(candidate)
        if variants:
            share = (1.0 - config.primary_form_weight) / len(variants)
            forms_of[word] = [(primary, config.primary_form_weight)] + [
                (v, share) for v in variants
            ]
        else:
            forms_of[word] = [(primary, 1.0)]

    entry_probs = {
        (word, form): priors[i] * conditional
        for i, word in enumerate(words)
        for form, conditional in forms_of[word]
    }
    lexicon = Lexicon.from_counts(alphabet, entry_probs)

    def sample(count):
        samples = []
        for _ in range(count):
            i = int(rng.choice(config.n_classes, p=priors))
            word = words[i]
            forms = forms_of[word]
            j = int(rng.choice(len(forms), p=[w for _, w in forms]))
            samples.append((word, corrupt(forms[j][0], config, alphabet, rng)))
        return samples

    return Benchmark(
        config=config,
        source_alphabet=alphabet,
        target_alphabet=alphabet,
        lexicon=lexicon,
        train=sample(config.n_train),
        test=sample(config.n_test),
        channel=channel_transducer(config, alphabet),
    )


def exact_match_ambiguity_error(
    lexicon: Lexicon, samples: Sequence[tuple[str, Sequence[str]]]
) -> float:
    """The error a distance-zero matcher cannot beat, from homophony alone.

    For each sample whose form appears in the lexicon, the matcher
    returns every entry with exactly that form and earns fractional
    credit for the true word's share; samples with unseen forms earn
    nothing.
    """
    credits = []
    for word, y in samples:
        entries = lexicon.words_of_form(y)
        if not entries:
            credits.append(0.0)
            continue
        correct = sum(1 for w, _ in entries if w == word)
        credits.append(correct / len(entries))
    return 1.0 - math.fsum(credits) / len(credits)
