"""Command-line interface.

Exit codes: 0 on success, 1 on input or configuration errors, 2 on
training or numerical failures.  All commands are deterministic given
identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_io
from .alphabet import levenshtein_costs
from .classifier import (
    ClassifierModel,
    ClassifierTrainOptions,
    Lexicon,
    classify,
    evaluate_classifier,
    initial_classifier,
    pair_log_joint,
    train_classifier,
)
from .errors import ConfigurationError, EditModelError, InputError, TrainingError
from .experiment import ExperimentConfig, format_results_table, run_experiment
from .lengths import FactoredTransducer, generate_strings
from .mixture import MixtureTransducer
from .serialization import load_model, save_model
from .synth import Benchmark, BenchmarkConfig, generate_benchmark
from .training import TrainOptions, TyingScheme, train
from .transducer import (
    LN2,
    Transducer,
    classic_edit_distance,
    stochastic_distance,
    viterbi_distance,
)


def _tying_scheme(name, source_alphabet, target_alphabet):
    if name == "none":
        return None
    if name == "four-class":
        return TyingScheme.four_class(source_alphabet, target_alphabet)
    raise ConfigurationError(f"unknown tying scheme {name!r}")


def _add_train_flags(parser, classifier=False):
    parser.add_argument("--iterations", type=int, default=10,
                        help="maximum training iterations (default 10)")
    parser.add_argument("--threshold", type=float, default=1e-6,
                        help="relative log-likelihood convergence threshold")
    parser.add_argument("--smoothing", type=float, default=0.0,
                        help="seed value added to every edit-operation count")
    parser.add_argument("--tying", choices=["none", "four-class"], default="none")
    parser.add_argument("--threads", type=int, default=1,
                        help="corpus partitions processed in parallel")
    if classifier:
        parser.add_argument("--lexicon-smoothing", type=float, default=0.1,
                            help="seed value added to every lexicon entry count")


def cmd_train_distance(args) -> int:
    source = corpus_io.read_alphabet(args.source_alphabet)
    target = corpus_io.read_alphabet(args.target_alphabet)
    pairs = corpus_io.read_pair_corpus(args.pairs, source, target)
    if args.init == "uniform":
        model = Transducer.uniform(source, target)
    else:
        model = Transducer.random(source, target, np.random.default_rng(args.seed))
    options = TrainOptions(
        max_iterations=args.iterations,
        threshold=args.threshold,
        smoothing=args.smoothing,
        expectation=args.expectation,
        tying=_tying_scheme(args.tying, source, target),
        n_jobs=args.threads,
    )
    result = train(model, pairs, options)
    for i, (bits, skipped) in enumerate(zip(result.log_likelihood, result.skipped), start=1):
        note = f"  ({skipped} pairs skipped)" if skipped else ""
        print(f"iteration {i:3d}: -log2 P(corpus) = {-bits:.6f} bits{note}")
    save_model(result.transducer, args.output)
    print(f"model written to {args.output}")
    return 0


def cmd_distance(args) -> int:
    model = load_model(args.model)
    if isinstance(model, ClassifierModel):
        transducer = model.transducer
    elif isinstance(model, (Transducer, MixtureTransducer)):
        transducer = model
    else:
        raise InputError("the distance command needs an edit model")
    x = tuple(args.x.split())
    y = tuple(args.y.split())
    if args.kind == "levenshtein":
        costs = levenshtein_costs(transducer.source_alphabet, transducer.target_alphabet)
        value, _ = classic_edit_distance(x, y, costs)
        print(f"{value:.6f}")
        return 0
    if isinstance(transducer, MixtureTransducer):
        value = -pair_log_joint(transducer, x, y, args.kind) / LN2
    elif args.kind == "stochastic":
        value = stochastic_distance(x, y, transducer)
    else:
        value = viterbi_distance(x, y, transducer)[0]
    print(f"{value:.6f}")
    return 0


def cmd_train_classifier(args) -> int:
    if (args.lexicon is None) == (args.build_lexicon is None):
        raise InputError("give exactly one of --lexicon or --build-lexicon")
    target = corpus_io.read_alphabet(args.target_alphabet)
    train_samples = corpus_io.read_labeled_corpus(args.train, target)
    if args.lexicon is not None:
        lexicon = load_model(args.lexicon)
        if isinstance(lexicon, ClassifierModel):
            lexicon = lexicon.lexicon
        if not isinstance(lexicon, Lexicon):
            raise InputError("--lexicon must name a lexicon or classifier file")
        source = lexicon.source_alphabet
        entries = [(word, form) for word, form, _ in lexicon.entries()]
    else:
        source = corpus_io.read_alphabet(args.source_alphabet) if args.source_alphabet else target
        samples = list(train_samples)
        if args.build_lexicon == "from-all":
            if args.test is None:
                raise InputError("--build-lexicon from-all needs --test")
            samples += corpus_io.read_labeled_corpus(args.test, target)
        for _, y in samples:
            for token in y:
                if token not in source:
                    raise InputError(f"symbol {token!r} is not in the source alphabet")
        entries = sorted({(word, tuple(y)) for word, y in samples})
    model = initial_classifier(
        source,
        target,
        entries,
        adapt_word=not args.fix_word,
        adapt_entry=not args.fix_entry,
    )
    options = ClassifierTrainOptions(
        max_iterations=args.iterations,
        threshold=args.threshold,
        smoothing=args.smoothing,
        lexicon_smoothing=args.lexicon_smoothing,
        tying=_tying_scheme(args.tying, source, target),
        n_jobs=args.threads,
    )
    result = train_classifier(model, train_samples, options)
    for i, (bits, skipped) in enumerate(zip(result.log_likelihood, result.skipped), start=1):
        note = f"  ({skipped} samples skipped)" if skipped else ""
        print(f"iteration {i:3d}: -log2 P(corpus) = {-bits:.6f} bits{note}")
    save_model(result.model, args.output)
    print(f"classifier written to {args.output}")
    return 0


def cmd_classify(args) -> int:
    model = load_model(args.model)
    if not isinstance(model, ClassifierModel):
        raise InputError("the classify command needs a classifier file")
    text = Path(args.input).read_text(encoding="utf-8")
    try:
        samples = [y for _, y in corpus_io.parse_labeled_corpus(text)]
    except InputError:
        samples = [y for _, y in ((None, tuple(line.split())) for line in text.splitlines()
                                  if line.strip() and not line.lstrip().startswith("#"))]
    for y in samples:
        decision = classify(y, model, kind=args.kind)
        if decision.is_no_decision:
            print("-")
        else:
            print(" ".join(decision.words))
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    if not isinstance(model, ClassifierModel):
        raise InputError("the eval command needs a classifier file")
    test = corpus_io.read_labeled_corpus(args.test, model.transducer.target_alphabet)
    error = evaluate_classifier(model, test, kind=args.kind)
    print(f"word error rate: {100 * error:.2f}%")
    return 0


def cmd_generate(args) -> int:
    model = load_model(args.model)
    rng = np.random.default_rng(args.seed)
    pairs = []
    if isinstance(model, FactoredTransducer):
        if args.lengths is None:
            raise InputError("generating from a factored model needs --lengths T V")
        T, V = args.lengths
        for _ in range(args.count):
            pairs.append(generate_strings(T, V, model, rng))
    elif isinstance(model, Transducer):
        if args.lengths is not None:
            raise InputError("--lengths only applies to factored models")
        for _ in range(args.count):
            alignment = model.sample(rng)
            pairs.append((alignment.source, alignment.target))
    else:
        raise InputError("the generate command needs a flat or factored edit model")
    text = corpus_io.format_pair_corpus(pairs)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def write_benchmark(benchmark: Benchmark, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    corpus_io.write_alphabet(benchmark.source_alphabet, directory / "source-alphabet.txt")
    corpus_io.write_alphabet(benchmark.target_alphabet, directory / "target-alphabet.txt")
    save_model(benchmark.lexicon, directory / "lexicon.model")
    save_model(benchmark.channel, directory / "channel.model")
    corpus_io.write_labeled_corpus(benchmark.train, directory / "train.tsv")
    corpus_io.write_labeled_corpus(benchmark.test, directory / "test.tsv")


def cmd_synth_benchmark(args) -> int:
    config = BenchmarkConfig(
        n_classes=args.classes,
        alphabet_size=args.alphabet_size,
        min_length=args.min_length,
        max_length=args.max_length,
        substitution_rate=args.sub,
        insertion_rate=args.ins,
        deletion_rate=args.dele,
        n_train=args.train,
        n_test=args.test,
        seed=args.seed,
    )
    benchmark = generate_benchmark(config)
    write_benchmark(benchmark, Path(args.output_dir))
    print(f"benchmark written to {args.output_dir}")
    print(f"  lexicon entries: {len(benchmark.lexicon)}")
    print(f"  train samples:   {len(benchmark.train)}")
    print(f"  test samples:    {len(benchmark.test)}")
    return 0


def cmd_experiment(args) -> int:
    directory = Path(args.data)
    source = corpus_io.read_alphabet(directory / "source-alphabet.txt")
    target = corpus_io.read_alphabet(directory / "target-alphabet.txt")
    lexicon = load_model(directory / "lexicon.model")
    if not isinstance(lexicon, Lexicon):
        raise InputError("lexicon.model must hold a lexicon")
    train_samples = corpus_io.read_labeled_corpus(directory / "train.tsv", target)
    test_samples = corpus_io.read_labeled_corpus(directory / "test.tsv", target)
    results = []
    for mode in args.modes.split(","):
        config = ExperimentConfig(
            lexicon_source=mode.strip(),
            iterations=args.iterations,
            adapt_word=not args.fix_word,
            adapt_entry=not args.fix_entry,
            n_jobs=args.threads,
        )
        results.append(
            run_experiment(config, source, target, train_samples, test_samples, lexicon)
        )
    print(format_results_table(results))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stredit",
        description="Learn string edit distances and classify strings against a lexicon.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-distance", help="fit an edit model to a pair corpus")
    p.add_argument("--pairs", required=True, help="pair corpus file")
    p.add_argument("--source-alphabet", required=True)
    p.add_argument("--target-alphabet", required=True)
    p.add_argument("--output", "-o", required=True, help="model file to write")
    p.add_argument("--expectation", choices=["full", "viterbi"], default="full")
    p.add_argument("--init", choices=["uniform", "random"], default="uniform")
    p.add_argument("--seed", type=int, default=0, help="seed for --init random")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train_distance)

    p = sub.add_parser("distance", help="distance between two strings under a model")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", choices=["stochastic", "viterbi", "levenshtein"],
                   default="stochastic")
    p.add_argument("x", help="source string, tokens separated by spaces")
    p.add_argument("y", help="target string, tokens separated by spaces")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("train-classifier", help="fit a lexicon classifier to labeled strings")
    p.add_argument("--train", required=True, help="labeled corpus file")
    p.add_argument("--target-alphabet", required=True)
    p.add_argument("--source-alphabet",
                   help="prototype alphabet; defaults to the target alphabet")
    p.add_argument("--lexicon", help="external lexicon or classifier file")
    p.add_argument("--build-lexicon", choices=["from-train", "from-all"],
                   help="harvest lexicon entries from the corpus instead")
    p.add_argument("--test", help="labeled test corpus, needed for from-all")
    p.add_argument("--fix-word", action="store_true",
                   help="hold the word marginal fixed during training")
    p.add_argument("--fix-entry", action="store_true",
                   help="hold the form-given-word conditional fixed during training")
    p.add_argument("--output", "-o", required=True)
    _add_train_flags(p, classifier=True)
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("classify", help="label strings with a trained classifier")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", choices=["stochastic", "viterbi"], default="stochastic")
    p.add_argument("--input", required=True,
                   help="labeled corpus or one string of tokens per line")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval", help="word error rate of a classifier on labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", choices=["stochastic", "viterbi"], default="stochastic")
    p.add_argument("--test", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("generate", help="sample string pairs from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lengths", type=int, nargs=2, metavar=("T", "V"),
                   help="output lengths (factored models only)")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("synth-benchmark", help="generate synthetic classification data")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--classes", type=int, default=50)
    p.add_argument("--alphabet-size", type=int, default=10)
    p.add_argument("--min-length", type=int, default=5)
    p.add_argument("--max-length", type=int, default=10)
    p.add_argument("--sub", type=float, default=0.10, help="per-symbol substitution rate")
    p.add_argument("--ins", type=float, default=0.05, help="per-gap insertion rate")
    p.add_argument("--del", type=float, default=0.05, dest="dele",
                   help="per-symbol deletion rate")
    p.add_argument("--train", type=int, default=5000)
    p.add_argument("--test", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_benchmark)

    p = sub.add_parser("experiment", help="run the classification grid on benchmark data")
    p.add_argument("--data", required=True, help="directory written by synth-benchmark")
    p.add_argument("--modes", default="external",
                   help="comma-separated lexicon modes: external,from-train,from-all")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--fix-word", action="store_true")
    p.add_argument("--fix-entry", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TrainingError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EditModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
