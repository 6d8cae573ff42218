"""String classification against a weighted prototype lexicon.

A class label and an observed string are scored jointly by summing, over
the class's prototypes, the probability of choosing the labeled
prototype times the edit-model probability of transducing it into the
observation.  The prototype acts as a hidden variable, so classification
aggregates the similarity of the observation to every prototype of a
class instead of trusting a single nearest neighbor.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from .alphabet import Alphabet, levenshtein_costs
from .errors import ConfigurationError, InputError, TrainingError
from .mixture import MixtureTransducer, mixture_log_joint
from .training import (
    EditAccumulator,
    TrainOptions,
    TrainResult,
    _expectation_from_lattice,
    _relative_change,
    apply_tying,
    maximization_step,
    train,
)
from .transducer import (
    LN2,
    NEG_INF,
    Transducer,
    _forward_rows,
    _logaddexp,
    classic_edit_distance,
    log_joint_probability,
    stochastic_distance,
    viterbi_distance,
)

Entry = tuple[str, tuple[str, ...]]
LabeledCorpus = Sequence[tuple[str, Sequence[str]]]

_LEXICON_TOL = 1e-9


class Lexicon:
    """A weighted set of (word, prototype-form) entries.

    Entry probabilities form one joint distribution over labeled
    prototypes; word and form marginals and the word-given-form
    conditional are derived from it.  Instances are immutable; updates
    produce new lexicons.  Entries are kept in sorted order so every
    derived iteration is deterministic.
    """

    __slots__ = ("source_alphabet", "_probs", "_log_probs", "_by_word", "_by_form",
                 "_form_marginal", "_word_marginal")

    def __init__(
        self,
        source_alphabet: Alphabet,
        probabilities: Mapping[Entry, float],
        _skip_checks: bool = False,
    ):
        given: dict[Entry, float] = {}
        for (word, form), p in sorted(probabilities.items()):
            if not _skip_checks:
                if not isinstance(word, str) or not word or any(c.isspace() for c in word):
                    raise ConfigurationError(f"invalid word label {word!r}")
                form = tuple(form)
                for token in form:
                    if token not in source_alphabet:
                        raise InputError(f"prototype symbol {token!r} is not in the alphabet")
                if p < 0:
                    raise ConfigurationError(f"negative probability for entry {(word, form)!r}")
            given[(word, form)] = float(p)
        if not given:
            raise ConfigurationError("a lexicon must contain at least one entry")
        total = math.fsum(given.values())
        if abs(total - 1.0) > _LEXICON_TOL:
            raise ConfigurationError(f"lexicon probabilities sum to {total!r}, not one")
        self._finish_init(
            source_alphabet,
            {key: (math.log(p) if p > 0 else float("-inf")) for key, p in given.items()},
        )

    @classmethod
    def _from_log_probabilities(
        cls, source_alphabet: Alphabet, log_probabilities: Mapping[Entry, float]
    ) -> "Lexicon":
        """Build from natural-log entry probabilities taken as canonical.

        Used when loading model files so that save/load cycles keep the
        serialized values exact; the implied distribution is still
        checked.
        """
        lexicon = cls.__new__(cls)
        lexicon._finish_init(source_alphabet, dict(sorted(log_probabilities.items())))
        total = math.fsum(lexicon._probs.values())
        if abs(total - 1.0) > _LEXICON_TOL:
            raise ConfigurationError(f"lexicon probabilities sum to {total!r}, not one")
        return lexicon

    def _finish_init(
        self, source_alphabet: Alphabet, log_probs: dict[Entry, float]
    ) -> None:
        # linear probabilities are derived from the canonical log values
        probs = {key: math.exp(logp) for key, logp in log_probs.items()}
        by_word: dict[str, list[tuple[tuple[str, ...], float]]] = {}
        by_form: dict[tuple[str, ...], list[tuple[str, float]]] = {}
        form_marginal: dict[tuple[str, ...], float] = {}
        word_marginal: dict[str, float] = {}
        for (word, form), p in probs.items():
            by_word.setdefault(word, []).append((form, p))
            by_form.setdefault(form, []).append((word, p))
            form_marginal[form] = form_marginal.get(form, 0.0) + p
            word_marginal[word] = word_marginal.get(word, 0.0) + p
        self.source_alphabet = source_alphabet
        self._probs = probs
        self._log_probs = log_probs
        self._by_word = by_word
        self._by_form = by_form
        self._form_marginal = form_marginal
        self._word_marginal = word_marginal

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def from_counts(
        cls, source_alphabet: Alphabet, counts: Mapping[Entry, float]
    ) -> "Lexicon":
        total = math.fsum(counts.values())
        if total <= 0:
            raise ConfigurationError("lexicon counts must have positive total")
        return cls(
            source_alphabet,
            {(word, tuple(form)): c / total for (word, form), c in counts.items()},
        )

    @classmethod
    def uniform_product(
        cls, source_alphabet: Alphabet, entries: Iterable[Entry]
    ) -> "Lexicon":
        """Uniform word marginal times uniform form-given-word conditional.

        This is not uniform over entries: words with many prototypes
        spread the same word mass over more forms.
        """
        grouped: dict[str, set[tuple[str, ...]]] = {}
        for word, form in entries:
            grouped.setdefault(word, set()).add(tuple(form))
        if not grouped:
            raise ConfigurationError("a lexicon must contain at least one entry")
        n_words = len(grouped)
        probs = {
            (word, form): 1.0 / (n_words * len(forms))
            for word, forms in grouped.items()
            for form in forms
        }
        return cls(source_alphabet, probs)

    @classmethod
    def from_corpus(
        cls,
        source_alphabet: Alphabet,
        samples: LabeledCorpus,
        smoothing: float = 0.0,
    ) -> "Lexicon":
        """Distinct (word, string) pairs weighted by corpus frequency.

        Duplicate samples collapse into one entry with summed frequency;
        ``smoothing`` is added to every distinct entry's count.
        """
        if smoothing < 0:
            raise ConfigurationError("smoothing must be nonnegative")
        counts: dict[Entry, float] = {}
        for word, string in samples:
            key = (word, tuple(string))
            counts[key] = counts.get(key, 0.0) + 1.0
        if not counts:
            raise TrainingError("cannot build a lexicon from an empty corpus")
        if smoothing:
            counts = {key: c + smoothing for key, c in counts.items()}
        return cls.from_counts(source_alphabet, counts)

    # ------------------------------------------------------------------
    # accessors

    def probability(self, word: str, form: Sequence[str]) -> float:
        return self._probs.get((word, tuple(form)), 0.0)

    def log_probability(self, word: str, form: Sequence[str]) -> float:
        return self._log_probs.get((word, tuple(form)), float("-inf"))

    def entries(self) -> Iterable[tuple[str, tuple[str, ...], float]]:
        for (word, form), p in self._probs.items():
            yield word, form, p

    def keys(self) -> Iterable[Entry]:
        return self._probs.keys()

    def words(self) -> tuple[str, ...]:
        return tuple(self._by_word.keys())

    def forms(self, word: str) -> tuple[tuple[tuple[str, ...], float], ...]:
        """The (form, joint probability) prototypes of one word."""
        return tuple(self._by_word.get(word, ()))

    def word_marginal(self, word: str) -> float:
        return self._word_marginal.get(word, 0.0)

    def form_marginal(self, form: Sequence[str]) -> float:
        return self._form_marginal.get(tuple(form), 0.0)

    def words_of_form(self, form: Sequence[str]) -> tuple[tuple[str, float], ...]:
        return tuple(self._by_form.get(tuple(form), ()))

    def word_given_form(self, word: str, form: Sequence[str]) -> float:
        marginal = self.form_marginal(form)
        if marginal <= 0.0:
            return 0.0
        return self.probability(word, form) / marginal

    def form_given_word(self, form: Sequence[str], word: str) -> float:
        marginal = self.word_marginal(word)
        if marginal <= 0.0:
            return 0.0
        return self.probability(word, form) / marginal

    def __len__(self) -> int:
        return len(self._probs)

    def __contains__(self, entry: object) -> bool:
        if isinstance(entry, tuple) and len(entry) == 2:
            word, form = entry
            try:
                return (word, tuple(form)) in self._probs
            except TypeError:
                return False
        return False

    def __repr__(self) -> str:
        return f"Lexicon({len(self._probs)} entries, {len(self._by_word)} words)"


@dataclass(frozen=True)
class ClassifierModel:
    """An edit model, a prototype lexicon, and adaptation switches.

    The switches control which lexicon factors the trainer may update:
    with ``adapt_word`` off the word marginal is held at its current
    value across updates, and with ``adapt_entry`` off the form-given-
    word conditional is held fixed.
    """

    transducer: Transducer | MixtureTransducer
    lexicon: Lexicon
    adapt_word: bool = True
    adapt_entry: bool = True

    def __post_init__(self) -> None:
        if self.transducer.source_alphabet != self.lexicon.source_alphabet:
            raise ConfigurationError("lexicon and edit model use different source alphabets")


def initial_classifier(
    source_alphabet: Alphabet,
    target_alphabet: Alphabet,
    entries: Iterable[Entry],
    adapt_word: bool = True,
    adapt_entry: bool = True,
) -> ClassifierModel:
    """The standard starting point for training: everything uniform.

    The edit model is uniform over operations and the lexicon has a
    uniform word marginal with uniform per-word form conditionals.
    """
    return ClassifierModel(
        Transducer.uniform(source_alphabet, target_alphabet),
        Lexicon.uniform_product(source_alphabet, entries),
        adapt_word=adapt_word,
        adapt_entry=adapt_entry,
    )


def pair_log_joint(
    transducer: Transducer | MixtureTransducer,
    x: Sequence[str],
    y: Sequence[str],
    kind: str = "stochastic",
) -> float:
    """Natural-log pair probability under a plain or mixture edit model.

    ``kind`` selects aggregation over all alignments ("stochastic") or
    the single best alignment ("viterbi").
    """
    if isinstance(transducer, MixtureTransducer):
        return mixture_log_joint(x, y, transducer, kind)
    if kind == "stochastic":
        return log_joint_probability(x, y, transducer)
    if kind == "viterbi":
        bits, _ = viterbi_distance(x, y, transducer)
        return -bits * LN2
    raise ConfigurationError("kind must be 'stochastic' or 'viterbi'")


def class_log_joints(
    y: Sequence[str], model: ClassifierModel, kind: str = "stochastic"
) -> dict[str, float]:
    """Natural-log joint p(word, y) for every lexicon word.

    For each word this sums, over its prototypes x, the word-given-form
    probability times the pair probability of (x, y).
    """
    y = tuple(y)
    joints: dict[str, float] = {}
    for word in model.lexicon.words():
        total = NEG_INF
        for form, joint_p in model.lexicon.forms(word):
            conditional = model.lexicon.word_given_form(word, form)
            if conditional <= 0.0:
                continue
            logp = pair_log_joint(model.transducer, form, y, kind)
            total = _logaddexp(total, math.log(conditional) + logp)
        joints[word] = total
    return joints


def class_posteriors(
    y: Sequence[str], model: ClassifierModel, kind: str = "stochastic"
) -> dict[str, float]:
    """Posterior p(word | y) over the lexicon's words.

    All-zero when no word assigns the observation positive probability.
    """
    joints = class_log_joints(y, model, kind)
    return _normalize_log_scores(joints)


def _normalize_log_scores(log_scores: Mapping[str, float]) -> dict[str, float]:
    if not log_scores:
        raise ConfigurationError("cannot classify with an empty lexicon")
    best = max(log_scores.values())
    if best == NEG_INF:
        return {word: 0.0 for word in log_scores}
    total = 0.0
    shifted = {}
    for word, value in log_scores.items():
        p = math.exp(value - best)
        shifted[word] = p
        total += p
    return {word: p / total for word, p in shifted.items()}


@dataclass(frozen=True)
class Decision:
    """The outcome of classifying one string.

    ``entries`` lists every lexicon entry whose score reaches the
    optimum within the tie tolerance, in deterministic sorted order; an
    empty tuple is an explicit "no decision" (nothing had positive
    probability).  ``score`` is the optimal value: the maximal class
    posterior, the maximal expected utility, or the minimal distance,
    depending on the rule that produced the decision.
    """

    entries: tuple[Entry, ...]
    score: float

    @property
    def words(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for word, _ in self.entries:
            seen.setdefault(word)
        return tuple(seen)

    @property
    def is_no_decision(self) -> bool:
        return not self.entries

    def credit(self, true_word: str) -> float:
        """Fraction of the decided entries that carry the true word."""
        if not self.entries:
            return 0.0
        correct = sum(1 for word, _ in self.entries if word == true_word)
        return correct / len(self.entries)


@dataclass(frozen=True)
class UtilityFunction:
    """Utility of deciding class u when the true class is w."""

    values: Mapping[tuple[str, str], float]
    default: float = 0.0

    def utility(self, decided: str, true: str) -> float:
        return self.values.get((decided, true), self.default)

    @classmethod
    def identity(cls, words: Iterable[str]) -> "UtilityFunction":
        """One for a correct decision, zero otherwise.

        Maximizing expected utility under this function reproduces the
        minimum-error-rate rule.
        """
        return cls({(w, w): 1.0 for w in words})


def classify(
    y: Sequence[str],
    model: ClassifierModel,
    kind: str = "stochastic",
    tie_tolerance: float = 1e-9,
    utility: UtilityFunction | None = None,
) -> Decision:
    """Decide which word(s) best explain an observed string.

    Without a utility function, returns every lexicon entry of every
    word tying the maximal posterior within the relative tolerance, so
    homophones are preserved.  With a utility function, the decided
    words instead maximize expected utility under the posterior.
    """
    posteriors = class_posteriors(y, model, kind)
    if max(posteriors.values()) <= 0.0:
        return Decision((), 0.0)
    if utility is None:
        scores = posteriors
    else:
        scores = {
            u: math.fsum(utility.utility(u, w) * p for w, p in posteriors.items())
            for u in posteriors
        }
    best = max(scores.values())
    cutoff = best - tie_tolerance * max(1.0, abs(best))
    chosen = sorted(word for word, value in scores.items() if value >= cutoff)
    entries = tuple(
        (word, form) for word in chosen for form, _ in model.lexicon.forms(word)
    )
    return Decision(entries, best)


# ----------------------------------------------------------------------
# nearest-prototype decision rules

DistanceFn = Callable[[Sequence[str], Sequence[str]], float]


def levenshtein_rule(source_alphabet: Alphabet, target_alphabet: Alphabet) -> DistanceFn:
    costs = levenshtein_costs(source_alphabet, target_alphabet)
    return lambda x, y: classic_edit_distance(x, y, costs)[0]


def stochastic_rule(transducer: Transducer) -> DistanceFn:
    return lambda x, y: stochastic_distance(x, y, transducer)


def viterbi_rule(transducer: Transducer) -> DistanceFn:
    return lambda x, y: viterbi_distance(x, y, transducer)[0]


def nearest_neighbor_classify(
    y: Sequence[str],
    lexicon: Lexicon,
    distance: DistanceFn,
    tie_tolerance: float = 1e-9,
) -> Decision:
    """Return every lexicon entry at minimal distance from the observation.

    The decision's score is the minimal distance; entries whose distance
    is infinite never enter the decision, and a decision is empty only
    when every entry is infinitely far.
    """
    y = tuple(y)
    best = math.inf
    scored: list[tuple[float, Entry]] = []
    for word, form, _ in lexicon.entries():
        d = distance(form, y)
        scored.append((d, (word, form)))
        if d < best:
            best = d
    if math.isinf(best):
        return Decision((), math.inf)
    cutoff = best + tie_tolerance * max(1.0, abs(best))
    entries = tuple(sorted(entry for d, entry in scored if d <= cutoff))
    return Decision(entries, best)


# ----------------------------------------------------------------------
# scoring


def word_error_rate(decisions: Iterable[Decision], labels: Iterable[str]) -> float:
    """One minus the mean per-sample fraction of correct decided entries.

    Homophone-aware: a decision listing several entries earns fractional
    credit for the correct ones.  Empty decisions and out-of-vocabulary
    labels earn zero credit.
    """
    credits = [decision.credit(label) for decision, label in zip(decisions, labels)]
    if not credits:
        raise InputError("cannot score an empty test corpus")
    return 1.0 - math.fsum(credits) / len(credits)


def evaluate_classifier(
    model: ClassifierModel,
    samples: LabeledCorpus,
    kind: str = "stochastic",
    tie_tolerance: float = 1e-9,
) -> float:
    """Word error rate of the posterior decision rule on labeled samples."""
    samples = list(samples)
    decisions = [classify(y, model, kind, tie_tolerance) for _, y in samples]
    return word_error_rate(decisions, [w for w, _ in samples])


def evaluate_nearest_neighbor(
    lexicon: Lexicon,
    samples: LabeledCorpus,
    distance: DistanceFn,
    tie_tolerance: float = 1e-9,
) -> float:
    """Word error rate of the nearest-prototype rule on labeled samples."""
    samples = list(samples)
    decisions = [
        nearest_neighbor_classify(y, lexicon, distance, tie_tolerance) for _, y in samples
    ]
    return word_error_rate(decisions, [w for w, _ in samples])


# ----------------------------------------------------------------------
# training


@dataclass
class ClassifierTrainOptions(TrainOptions):
    """Trainer knobs plus the lexicon accumulator's smoothing seed.

    ``smoothing`` (inherited) seeds the edit-operation counts, which
    default to zero; ``lexicon_smoothing`` seeds every lexicon entry's
    count so no entry is driven to zero probability.
    """

    lexicon_smoothing: float = 0.1

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.lexicon_smoothing < 0:
            raise ConfigurationError("lexicon smoothing must be nonnegative")
        if self.expectation != "full":
            raise ConfigurationError("classifier training uses full expectations only")


class LexiconAccumulator:
    """Expected counts for lexicon entries, seeded with a smoothing constant."""

    __slots__ = ("counts", "skipped")

    def __init__(self, lexicon: Lexicon, smoothing: float = 0.1):
        if smoothing < 0:
            raise ConfigurationError("smoothing must be nonnegative")
        self.counts: dict[Entry, float] = {key: smoothing for key in lexicon.keys()}
        self.skipped = 0

    def add(self, word: str, form: Sequence[str], weight: float) -> None:
        key = (word, tuple(form))
        if key not in self.counts:
            raise ConfigurationError(f"entry {key!r} is not in the lexicon")
        self.counts[key] += weight

    def total(self) -> float:
        return math.fsum(self.counts.values())

    def merge(self, other: "LexiconAccumulator") -> "LexiconAccumulator":
        if other.counts.keys() != self.counts.keys():
            raise ConfigurationError("cannot merge accumulators over different lexicons")
        for key, value in other.counts.items():
            self.counts[key] += value
        self.skipped += other.skipped
        return self


def classifier_expectation_step(
    word: str,
    y: Sequence[str],
    model: ClassifierModel,
    edit_accumulator: EditAccumulator,
    lexicon_accumulator: LexiconAccumulator,
) -> float:
    """Accumulate expectations for one labeled sample.

    Each prototype of the labeled word receives the posterior
    probability that it generated the observation; that posterior also
    weights an edit-model expectation step on the (prototype,
    observation) pair.  Returns the natural-log joint probability of the
    sample, or -inf when it is unreachable (tallied, nothing added).
    """
    transducer = model.transducer
    if not isinstance(transducer, Transducer):
        raise ConfigurationError("training requires a plain edit model, not a mixture")
    y = tuple(y)
    ys = transducer.target_alphabet.encode(y)
    forms = model.lexicon.forms(word)
    # one forward pass per prototype; the lattices are reused below so
    # the expectation pass does not evaluate each pair twice
    contributions = []
    total = NEG_INF
    for form, _ in forms:
        conditional = model.lexicon.word_given_form(word, form)
        if conditional <= 0.0:
            continue
        xs = transducer.source_alphabet.encode(form)
        fwd = _forward_rows(xs, ys, transducer._sub, transducer._del, transducer._ins)
        logp = (
            math.log(conditional) + fwd[len(xs)][len(ys)] + transducer.log_termination
        )
        contributions.append((form, xs, fwd, logp))
        total = _logaddexp(total, logp)
    if total == NEG_INF:
        lexicon_accumulator.skipped += 1
        return NEG_INF
    for form, xs, fwd, logp in contributions:
        posterior = math.exp(logp - total)
        lexicon_accumulator.add(word, form, posterior)
        _expectation_from_lattice(xs, ys, transducer, edit_accumulator, posterior, fwd)
    return total


def classifier_maximization_step(
    model: ClassifierModel,
    edit_accumulator: EditAccumulator,
    lexicon_accumulator: LexiconAccumulator,
) -> ClassifierModel:
    """Renormalize both accumulators into an updated model.

    Honors the adaptation switches: a factor that is switched off is
    restored from the current lexicon instead of re-estimated, so fixed
    marginals and conditionals pass through unchanged.
    """
    new_transducer = maximization_step(edit_accumulator)
    old = model.lexicon
    if not model.adapt_word and not model.adapt_entry:
        return replace(model, transducer=new_transducer)
    total = lexicon_accumulator.total()
    if total <= 0.0:
        raise TrainingError("no lexicon expectations accumulated")
    updated = {key: count / total for key, count in lexicon_accumulator.counts.items()}
    if model.adapt_word and model.adapt_entry:
        lexicon = Lexicon(old.source_alphabet, updated, _skip_checks=True)
        return replace(model, transducer=new_transducer, lexicon=lexicon)
    # one factor fixed: recompose joint = marginal(word) * conditional(form | word)
    new_word_marginal: dict[str, float] = {}
    for (word, _), p in updated.items():
        new_word_marginal[word] = new_word_marginal.get(word, 0.0) + p
    recomposed: dict[Entry, float] = {}
    for word in old.words():
        if model.adapt_word:
            word_mass = new_word_marginal.get(word, 0.0)
        else:
            word_mass = old.word_marginal(word)
        updated_word_mass = new_word_marginal.get(word, 0.0)
        for form, old_joint in old.forms(word):
            if model.adapt_entry and updated_word_mass > 0.0:
                conditional = updated[(word, form)] / updated_word_mass
            else:
                # fixed conditional, or no new evidence for this word
                old_marginal = old.word_marginal(word)
                if old_marginal > 0:
                    conditional = old_joint / old_marginal
                else:
                    conditional = 1.0 / len(old.forms(word))
            recomposed[(word, form)] = word_mass * conditional
    lexicon = Lexicon(old.source_alphabet, recomposed, _skip_checks=True)
    return replace(model, transducer=new_transducer, lexicon=lexicon)


@dataclass
class ClassifierTrainResult:
    """A trained classifier plus its per-iteration audit trail.

    ``log_likelihood`` holds the corpus joint log2 probability measured
    before each iteration's update; ``skipped`` counts unreachable
    samples per iteration.
    """

    model: ClassifierModel
    log_likelihood: list[float] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)


def train_classifier(
    model: ClassifierModel,
    samples: LabeledCorpus,
    options: ClassifierTrainOptions | None = None,
) -> ClassifierTrainResult:
    """Fit the edit model and lexicon to a corpus of labeled strings.

    Joint-probability training: each iteration accumulates posterior
    expectations for the lexicon entries and the edit operations, then
    renormalizes both, honoring the model's adaptation switches.
    """
    options = options or ClassifierTrainOptions()
    samples = [(word, tuple(y)) for word, y in samples]
    if not samples:
        raise TrainingError("training corpus is empty")
    if options.tying is not None:
        options.tying.validate_for(
            model.transducer.source_alphabet, model.transducer.target_alphabet
        )
    result = ClassifierTrainResult(model)
    current = model
    for _ in range(options.max_iterations):
        edit_acc, lex_acc, ll_bits, processed = _classifier_expectation(
            samples, current, options
        )
        if processed == 0:
            raise TrainingError("every training sample has zero probability")
        result.log_likelihood.append(ll_bits)
        result.skipped.append(lex_acc.skipped)
        if (
            len(result.log_likelihood) > 1
            and _relative_change(result.log_likelihood[-2], result.log_likelihood[-1])
            <= options.threshold
        ):
            break
        current = classifier_maximization_step(current, edit_acc, lex_acc)
        if options.tying is not None:
            current = replace(current, transducer=apply_tying(current.transducer, options.tying))
        result.model = current
    return result


def _classifier_expectation(samples, model, options):
    transducer = model.transducer

    def sweep(chunk):
        edit_acc = EditAccumulator(transducer.source_alphabet, transducer.target_alphabet)
        lex_acc = LexiconAccumulator(model.lexicon, 0.0)
        ll = 0.0
        processed = 0
        for word, y in chunk:
            logp = classifier_expectation_step(word, y, model, edit_acc, lex_acc)
            if logp != NEG_INF:
                ll += logp
                processed += 1
        return edit_acc, lex_acc, ll, processed

    edit_accumulator = EditAccumulator(
        transducer.source_alphabet, transducer.target_alphabet, options.smoothing
    )
    lexicon_accumulator = LexiconAccumulator(model.lexicon, options.lexicon_smoothing)
    if options.n_jobs == 1 or len(samples) < 2 * options.n_jobs:
        chunks = [samples]
        results = [sweep(samples)]
    else:
        chunks = [samples[i :: options.n_jobs] for i in range(options.n_jobs)]
        with ThreadPoolExecutor(max_workers=options.n_jobs) as pool:
            results = list(pool.map(sweep, chunks))
    ll = 0.0
    processed = 0
    for edit_acc, lex_acc, chunk_ll, chunk_processed in results:
        edit_accumulator.merge(edit_acc)
        lexicon_accumulator.merge(lex_acc)
        ll += chunk_ll
        processed += chunk_processed
    return edit_accumulator, lexicon_accumulator, ll / LN2, processed


# ----------------------------------------------------------------------
# one-shot vocabulary growth


def add_word(
    model: ClassifierModel, word: str, form: Sequence[str], probability: float
) -> ClassifierModel:
    """Add one labeled prototype without retraining.

    The new entry takes the given probability, existing entries are
    scaled down by one minus it, and the edit model is untouched.  If
    the entry already exists, the new mass merges into it.
    """
    if not 0.0 < probability < 1.0:
        raise ConfigurationError("new-entry probability must lie strictly between 0 and 1")
    form = tuple(form)
    scaled = {
        key: p * (1.0 - probability) for key, p in model.lexicon._probs.items()
    }
    key = (word, form)
    scaled[key] = scaled.get(key, 0.0) + probability
    lexicon = Lexicon(model.lexicon.source_alphabet, scaled)
    return replace(model, lexicon=lexicon)


# ----------------------------------------------------------------------
# flat pairing baseline


def flat_training_pairs(
    samples: LabeledCorpus, lexicon: Lexicon
) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    """Every (prototype of the sample's word, observation) pair.

    A word with several prototypes contributes one pair per prototype
    for each of its samples, similar or not, which is exactly what makes
    this pairing a weak training signal.
    """
    pairs = []
    for word, y in samples:
        y = tuple(y)
        for form, _ in lexicon.forms(word):
            pairs.append((form, y))
    return pairs


def flat_pair_train(
    transducer: Transducer,
    samples: LabeledCorpus,
    lexicon: Lexicon,
    options: TrainOptions | None = None,
) -> TrainResult:
    """Train the edit model on the flat pairing of prototypes and samples.

    A baseline for nearest-prototype classification; unlike classifier
    training it weights dissimilar prototypes as heavily as similar
    ones.
    """
    return train(transducer, flat_training_pairs(samples, lexicon), options)


# ----------------------------------------------------------------------
# probability-level combination of trained classifiers


def mixed_class_log_joints(
    y: Sequence[str],
    models: Sequence[ClassifierModel],
    kind: str = "stochastic",
    weights: Sequence[float] | None = None,
) -> dict[str, float]:
    """Word joints of a uniform (or weighted) mixture of whole classifiers.

    Every model must expose the same word set; the mixture acts at the
    probability level, averaging the models' joint word-observation
    scores.
    """
    if not models:
        raise ConfigurationError("at least one classifier is required")
    if weights is None:
        weights = [1.0 / len(models)] * len(models)
    if len(weights) != len(models):
        raise ConfigurationError("one weight is required per classifier")
    words = set(models[0].lexicon.words())
    for model in models[1:]:
        if set(model.lexicon.words()) != words:
            raise ConfigurationError("classifiers decide over different word sets")
    combined: dict[str, float] = {word: NEG_INF for word in sorted(words)}
    for weight, model in zip(weights, models):
        if weight <= 0.0:
            continue
        log_weight = math.log(weight)
        for word, logp in class_log_joints(y, model, kind).items():
            combined[word] = _logaddexp(combined[word], log_weight + logp)
    return combined


def classify_mixed(
    y: Sequence[str],
    models: Sequence[ClassifierModel],
    kind: str = "stochastic",
    tie_tolerance: float = 1e-9,
    weights: Sequence[float] | None = None,
) -> Decision:
    """Posterior decision rule for a probability-level classifier mixture."""
    joints = mixed_class_log_joints(y, models, kind, weights)
    posteriors = _normalize_log_scores(joints)
    best = max(posteriors.values())
    if best <= 0.0:
        return Decision((), 0.0)
    cutoff = best - tie_tolerance * max(1.0, abs(best))
    chosen = sorted(word for word, value in posteriors.items() if value >= cutoff)
    entries: list[Entry] = []
    for word in chosen:
        seen = set()
        for model in models:
            for form, _ in model.lexicon.forms(word):
                if form not in seen:
                    seen.add(form)
                    entries.append((word, form))
    return Decision(tuple(sorted(entries)), best)


def evaluate_mixed(
    models: Sequence[ClassifierModel],
    samples: LabeledCorpus,
    kind: str = "stochastic",
    tie_tolerance: float = 1e-9,
) -> float:
    """Word error rate of the classifier-mixture decision rule."""
    samples = list(samples)
    decisions = [classify_mixed(y, models, kind, tie_tolerance) for _, y in samples]
    return word_error_rate(decisions, [w for w, _ in samples])
