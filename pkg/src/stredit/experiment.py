"""Grid experiment runner for the classification protocol.

One experiment fixes how the lexicon is obtained (an external lexicon,
entries harvested from the training corpus, or entries harvested from
the whole corpus), trains a tied and an untied classifier on the
labeled training data, and scores seven decision rules on the test
data: the unit-cost nearest-prototype baseline, then the tied, untied,
and mixed classifiers under both the aggregate and the best-alignment
reading of the pair probability.  The mixed column averages the tied
and untied classifiers at the probability level.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from .alphabet import Alphabet
from .classifier import (
    ClassifierModel,
    ClassifierTrainOptions,
    Lexicon,
    evaluate_classifier,
    evaluate_mixed,
    evaluate_nearest_neighbor,
    initial_classifier,
    levenshtein_rule,
    train_classifier,
)
from .errors import ConfigurationError
from .training import TyingScheme

LEXICON_MODES = ("external", "from-train", "from-all")
MODEL_COLUMNS = (
    "levenshtein",
    "stochastic-tied",
    "stochastic-untied",
    "stochastic-mixed",
    "viterbi-tied",
    "viterbi-untied",
    "viterbi-mixed",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """What to run: lexicon provenance, adaptation switches, iterations."""

    lexicon_source: str = "external"
    iterations: int = 10
    adapt_word: bool = True
    adapt_entry: bool = True
    lexicon_smoothing: float = 0.1
    edit_smoothing: float = 0.0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.lexicon_source not in LEXICON_MODES:
            raise ConfigurationError(
                f"lexicon source must be one of {', '.join(LEXICON_MODES)}"
            )


@dataclass
class ExperimentResult:
    """Word error rates per decision rule, plus the trained models."""

    config: ExperimentConfig
    error_rates: dict[str, float] = field(default_factory=dict)
    tied: ClassifierModel | None = None
    untied: ClassifierModel | None = None

    def row(self) -> list[float]:
        return [self.error_rates[name] for name in MODEL_COLUMNS]


def select_lexicon_entries(
    config: ExperimentConfig,
    lexicon: Lexicon | None,
    train: Sequence[tuple[str, Sequence[str]]],
    test: Sequence[tuple[str, Sequence[str]]],
) -> list[tuple[str, tuple[str, ...]]]:
    """Entry set for the requested lexicon provenance mode."""
    if config.lexicon_source == "external":
        if lexicon is None:
            raise ConfigurationError("external lexicon mode needs a lexicon")
        return [(word, form) for word, form, _ in lexicon.entries()]
    samples = list(train)
    if config.lexicon_source == "from-all":
        samples += list(test)
    return sorted({(word, tuple(y)) for word, y in samples})


def run_experiment(
    config: ExperimentConfig,
    source_alphabet: Alphabet,
    target_alphabet: Alphabet,
    train: Sequence[tuple[str, Sequence[str]]],
    test: Sequence[tuple[str, Sequence[str]]],
    lexicon: Lexicon | None = None,
) -> ExperimentResult:
    """Train the grid once and score every decision rule on the test set."""
    entries = select_lexicon_entries(config, lexicon, train, test)
    options = ClassifierTrainOptions(
        max_iterations=config.iterations,
        smoothing=config.edit_smoothing,
        lexicon_smoothing=config.lexicon_smoothing,
        n_jobs=config.n_jobs,
    )
    result = ExperimentResult(config)

    def fresh_model():
        return initial_classifier(
            source_alphabet,
            target_alphabet,
            entries,
            adapt_word=config.adapt_word,
            adapt_entry=config.adapt_entry,
        )

    untied = train_classifier(fresh_model(), train, options).model
    tied_options = replace(
        options, tying=TyingScheme.four_class(source_alphabet, target_alphabet)
    )
    tied = train_classifier(fresh_model(), train, tied_options).model
    result.tied = tied
    result.untied = untied

    baseline_lexicon = untied.lexicon  # same entry set in every model
    result.error_rates["levenshtein"] = evaluate_nearest_neighbor(
        baseline_lexicon, test, levenshtein_rule(source_alphabet, target_alphabet)
    )
    for kind in ("stochastic", "viterbi"):
        result.error_rates[f"{kind}-tied"] = evaluate_classifier(tied, test, kind)
        result.error_rates[f"{kind}-untied"] = evaluate_classifier(untied, test, kind)
        result.error_rates[f"{kind}-mixed"] = evaluate_mixed([tied, untied], test, kind)
    return result


def format_results_table(results: Sequence[ExperimentResult]) -> str:
    """An aligned text table, one row per experiment, in percent."""
    header = (
        f"{'lexicon':<12} {'Leven.':>8} "
        f"{'S-Tied':>8} {'S-Untied':>9} {'S-Mixed':>8} "
        f"{'V-Tied':>8} {'V-Untied':>9} {'V-Mixed':>8}"
    )
    lines = [header]
    for result in results:
        cells = " ".join(
            f"{100 * value:>{width}.2f}"
            for value, width in zip(result.row(), (8, 8, 9, 8, 8, 9, 8))
        )
        lines.append(f"{result.config.lexicon_source:<12} {cells}")
    return "\n".join(lines)
