"""Learnable stochastic string edit distances and prototype classification.

The core model is a memoryless stochastic edit process over a pair of
alphabets: it emits substitutions, deletions, insertions, and finally an
end marker, each with its own probability.  From it come two trainable
distances (aggregate and best-alignment), an expectation-maximization
trainer for pair corpora, finite mixtures, a hidden-prototype string
classifier with its own trainer, and a length-conditioned variant that
replaces the end marker with explicit transition and observation
factors.
"""

from .alphabet import (
    EPSILON,
    TERMINATE,
    TERMINATOR,
    Alignment,
    Alphabet,
    CostFunction,
    EditOp,
    levenshtein_costs,
)
from .classifier import (
    ClassifierModel,
    ClassifierTrainOptions,
    ClassifierTrainResult,
    Decision,
    Lexicon,
    LexiconAccumulator,
    UtilityFunction,
    add_word,
    class_log_joints,
    class_posteriors,
    classifier_expectation_step,
    classifier_maximization_step,
    classify,
    classify_mixed,
    evaluate_classifier,
    evaluate_mixed,
    evaluate_nearest_neighbor,
    flat_pair_train,
    flat_training_pairs,
    initial_classifier,
    levenshtein_rule,
    mixed_class_log_joints,
    nearest_neighbor_classify,
    pair_log_joint,
    stochastic_rule,
    train_classifier,
    viterbi_rule,
    word_error_rate,
)
from .errors import ConfigurationError, EditModelError, InputError, TrainingError
from .estimators import PrototypeStringClassifier, StochasticEditDistance
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    format_results_table,
    run_experiment,
)
from .lengths import (
    FactoredAccumulator,
    FactoredTrainResult,
    FactoredTransducer,
    LengthPrior,
    backward_evaluate_strings,
    conditional_distances,
    conditional_probability,
    expectation_step_strings,
    factor,
    forward_evaluate_strings,
    generate_strings,
    joint_with_length_prior,
    log_conditional_probability,
    maximization_step_strings,
    train_strings,
    unfactor,
)
from .mixture import (
    MixtureTransducer,
    mixture_log_joint,
    mixture_probability,
    mixture_stochastic_distance,
    uniform_mixture,
)
from .serialization import load_model, save_model
from .synth import (
    Benchmark,
    BenchmarkConfig,
    channel_transducer,
    corrupt,
    exact_match_ambiguity_error,
    generate_benchmark,
)
from .training import (
    EditAccumulator,
    TrainOptions,
    TrainResult,
    TyingScheme,
    apply_tying,
    expectation_step,
    maximization_step,
    train,
    viterbi_expectation_step,
)
from .transducer import (
    Transducer,
    ValidityReport,
    backward_evaluate,
    classic_edit_distance,
    forward_evaluate,
    joint_probability,
    log_joint_probability,
    sequence_length_probability,
    stochastic_distance,
    transducer_bit_costs,
    viterbi_distance,
)

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "Alphabet",
    "Benchmark",
    "BenchmarkConfig",
    "ClassifierModel",
    "ClassifierTrainOptions",
    "ClassifierTrainResult",
    "ConfigurationError",
    "CostFunction",
    "Decision",
    "EPSILON",
    "EditAccumulator",
    "EditModelError",
    "EditOp",
    "ExperimentConfig",
    "ExperimentResult",
    "FactoredAccumulator",
    "FactoredTrainResult",
    "FactoredTransducer",
    "InputError",
    "LengthPrior",
    "Lexicon",
    "LexiconAccumulator",
    "MixtureTransducer",
    "PrototypeStringClassifier",
    "StochasticEditDistance",
    "TERMINATE",
    "TERMINATOR",
    "TrainOptions",
    "TrainResult",
    "TrainingError",
    "Transducer",
    "TyingScheme",
    "UtilityFunction",
    "ValidityReport",
    "add_word",
    "apply_tying",
    "backward_evaluate",
    "backward_evaluate_strings",
    "channel_transducer",
    "class_log_joints",
    "class_posteriors",
    "classic_edit_distance",
    "classifier_expectation_step",
    "classifier_maximization_step",
    "classify",
    "classify_mixed",
    "conditional_distances",
    "conditional_probability",
    "corrupt",
    "evaluate_classifier",
    "evaluate_mixed",
    "evaluate_nearest_neighbor",
    "exact_match_ambiguity_error",
    "expectation_step",
    "expectation_step_strings",
    "factor",
    "flat_pair_train",
    "flat_training_pairs",
    "format_results_table",
    "forward_evaluate",
    "forward_evaluate_strings",
    "generate_benchmark",
    "generate_strings",
    "initial_classifier",
    "joint_probability",
    "joint_with_length_prior",
    "levenshtein_costs",
    "levenshtein_rule",
    "load_model",
    "log_conditional_probability",
    "log_joint_probability",
    "maximization_step",
    "maximization_step_strings",
    "mixed_class_log_joints",
    "mixture_log_joint",
    "mixture_probability",
    "mixture_stochastic_distance",
    "nearest_neighbor_classify",
    "pair_log_joint",
    "run_experiment",
    "save_model",
    "sequence_length_probability",
    "stochastic_distance",
    "stochastic_rule",
    "train",
    "train_classifier",
    "train_strings",
    "transducer_bit_costs",
    "uniform_mixture",
    "unfactor",
    "viterbi_distance",
    "viterbi_expectation_step",
    "viterbi_rule",
    "word_error_rate",
]
