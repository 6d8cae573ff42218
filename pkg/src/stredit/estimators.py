"""Estimator wrappers following the scikit-learn fit/predict protocol.

These wrap the library's trainers so the models compose with pipelines,
grid search, and cloning.  Samples are token sequences (tuples or lists
of strings), not feature matrices, so validation is done by the
package's own helpers rather than scikit-learn's numeric checks.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .alphabet import Alphabet
from .classifier import (
    ClassifierTrainOptions,
    Lexicon,
    class_posteriors,
    classify,
    evaluate_classifier,
    initial_classifier,
    train_classifier,
)
from .corpus import infer_alphabet
from .errors import ConfigurationError, InputError
from .training import TrainOptions, TyingScheme, train
from .transducer import Transducer, stochastic_distance, viterbi_distance


def _check_token_sequences(X):
    checked = []
    for i, string in enumerate(X):
        if isinstance(string, str):
            raise InputError(
                f"sample {i} is a plain string; pass a sequence of tokens instead"
            )
        checked.append(tuple(string))
    return checked


def _check_pairs(X):
    pairs = []
    for i, pair in enumerate(X):
        pair = tuple(pair)
        if len(pair) != 2:
            raise InputError(f"sample {i} is not a (source, target) pair")
        x, y = pair
        if isinstance(x, str) or isinstance(y, str):
            raise InputError(
                f"sample {i} holds a plain string; pass sequences of tokens instead"
            )
        pairs.append((tuple(x), tuple(y)))
    return pairs


def _resolve_tying(tying, source_alphabet, target_alphabet):
    if tying is None:
        return None
    if isinstance(tying, TyingScheme):
        return tying
    if tying == "four-class":
        return TyingScheme.four_class(source_alphabet, target_alphabet)
    raise ConfigurationError(f"unknown tying scheme {tying!r}")


class StochasticEditDistance(TransformerMixin, BaseEstimator):
    """Learn an edit distance from pairs of similar strings.

    ``fit`` takes an iterable of (source tokens, target tokens) pairs;
    ``transform`` maps such pairs to distances in bits, and
    :meth:`distance` scores a single pair.

    Parameters
    ----------
    iterations, threshold, smoothing, expectation:
        Passed to the trainer; see :class:`stredit.TrainOptions`.
    tying:
        None, "four-class", or a :class:`stredit.TyingScheme`.
    kind:
        Distance reported by ``transform``: "stochastic" aggregates all
        alignments, "viterbi" scores only the best one.
    init:
        "uniform" or "random" starting parameters.
    source_alphabet, target_alphabet:
        Optional :class:`stredit.Alphabet`; inferred from the training
        pairs when omitted.
    """

    def __init__(
        self,
        iterations: int = 10,
        threshold: float = 1e-6,
        smoothing: float = 0.0,
        expectation: str = "full",
        tying=None,
        kind: str = "stochastic",
        init: str = "uniform",
        source_alphabet: Alphabet | None = None,
        target_alphabet: Alphabet | None = None,
        random_state=None,
        n_jobs: int = 1,
    ):
        self.iterations = iterations
        self.threshold = threshold
        self.smoothing = smoothing
        self.expectation = expectation
        self.tying = tying
        self.kind = kind
        self.init = init
        self.source_alphabet = source_alphabet
        self.target_alphabet = target_alphabet
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        pairs = _check_pairs(X)
        source = self.source_alphabet or infer_alphabet([x for x, _ in pairs])
        target = self.target_alphabet or infer_alphabet([t for _, t in pairs])
        if self.init == "uniform":
            start = Transducer.uniform(source, target)
        elif self.init == "random":
            start = Transducer.random(source, target, np.random.default_rng(self.random_state))
        else:
            raise ConfigurationError(f"unknown init {self.init!r}")
        options = TrainOptions(
            max_iterations=self.iterations,
            threshold=self.threshold,
            smoothing=self.smoothing,
            expectation=self.expectation,
            tying=_resolve_tying(self.tying, source, target),
            n_jobs=self.n_jobs,
        )
        result = train(start, pairs, options)
        self.transducer_ = result.transducer
        self.log_likelihood_ = list(result.log_likelihood)
        self.n_skipped_ = result.skipped[-1]
        self.n_iter_ = len(result.log_likelihood)
        return self

    def distance(self, x, y, kind: str | None = None) -> float:
        check_is_fitted(self, "transducer_")
        kind = kind or self.kind
        if kind == "stochastic":
            return stochastic_distance(tuple(x), tuple(y), self.transducer_)
        if kind == "viterbi":
            return viterbi_distance(tuple(x), tuple(y), self.transducer_)[0]
        raise ConfigurationError(f"unknown distance kind {kind!r}")

    def transform(self, X) -> np.ndarray:
        """Distances in bits for an iterable of string pairs, shape (n, 1)."""
        check_is_fitted(self, "transducer_")
        pairs = _check_pairs(X)
        return np.array([[self.distance(x, y)] for x, y in pairs])


class PrototypeStringClassifier(ClassifierMixin, BaseEstimator):
    """Classify strings by their posterior over a prototype lexicon.

    ``fit`` takes token sequences and labels.  Without an external
    lexicon, the distinct (label, string) training pairs become the
    prototype entries.  Training starts from uniform parameters and
    adapts the edit model and, per the switches, the lexicon factors.

    ``score`` returns the mean fraction of correct entries in each
    decision set (one minus the word error rate), which credits ties
    fractionally instead of all-or-nothing accuracy.
    """

    def __init__(
        self,
        lexicon: Lexicon | None = None,
        iterations: int = 10,
        threshold: float = 1e-6,
        edit_smoothing: float = 0.0,
        lexicon_smoothing: float = 0.1,
        tying=None,
        adapt_word: bool = True,
        adapt_entry: bool = True,
        kind: str = "stochastic",
        tie_tolerance: float = 1e-9,
        source_alphabet: Alphabet | None = None,
        target_alphabet: Alphabet | None = None,
        n_jobs: int = 1,
    ):
        self.lexicon = lexicon
        self.iterations = iterations
        self.threshold = threshold
        self.edit_smoothing = edit_smoothing
        self.lexicon_smoothing = lexicon_smoothing
        self.tying = tying
        self.adapt_word = adapt_word
        self.adapt_entry = adapt_entry
        self.kind = kind
        self.tie_tolerance = tie_tolerance
        self.source_alphabet = source_alphabet
        self.target_alphabet = target_alphabet
        self.n_jobs = n_jobs

    def fit(self, X, y):
        strings = _check_token_sequences(X)
        labels = [str(label) for label in y]
        if len(labels) != len(strings):
            raise InputError("X and y have different lengths")
        samples = list(zip(labels, strings))
        target = self.target_alphabet or infer_alphabet(strings)
        if self.lexicon is not None:
            source = self.lexicon.source_alphabet
            entries = [(word, form) for word, form, _ in self.lexicon.entries()]
        else:
            source = self.source_alphabet or target
            entries = sorted({(word, string) for word, string in samples})
            for _, form in entries:
                for token in form:
                    if token not in source:
                        raise InputError(f"symbol {token!r} is not in the source alphabet")
        model = initial_classifier(
            source, target, entries, adapt_word=self.adapt_word, adapt_entry=self.adapt_entry
        )
        options = ClassifierTrainOptions(
            max_iterations=self.iterations,
            threshold=self.threshold,
            smoothing=self.edit_smoothing,
            lexicon_smoothing=self.lexicon_smoothing,
            tying=_resolve_tying(self.tying, source, target),
            n_jobs=self.n_jobs,
        )
        result = train_classifier(model, samples, options)
        self.model_ = result.model
        self.log_likelihood_ = list(result.log_likelihood)
        self.classes_ = np.array(sorted(self.model_.lexicon.words()), dtype=object)
        return self

    def decision_sets(self, X):
        """Full tie-aware decisions, one per sample."""
        check_is_fitted(self, "model_")
        return [
            classify(string, self.model_, kind=self.kind, tie_tolerance=self.tie_tolerance)
            for string in _check_token_sequences(X)
        ]

    def predict(self, X) -> np.ndarray:
        """One label per sample; ties resolve to the first word in sorted order."""
        decisions = self.decision_sets(X)
        return np.array(
            [decision.words[0] if decision.entries else "" for decision in decisions],
            dtype=object,
        )

    def predict_proba(self, X) -> np.ndarray:
        """Posterior over ``classes_`` for each sample."""
        check_is_fitted(self, "model_")
        rows = []
        for string in _check_token_sequences(X):
            posterior = class_posteriors(string, self.model_, kind=self.kind)
            rows.append([posterior[word] for word in self.classes_])
        return np.array(rows)

    def score(self, X, y, sample_weight=None) -> float:
        """Mean fractional credit; one minus the word error rate."""
        strings = _check_token_sequences(X)
        labels = [str(label) for label in y]
        error = evaluate_classifier(
            self.model_, list(zip(labels, strings)), kind=self.kind,
            tie_tolerance=self.tie_tolerance,
        )
        return 1.0 - error
