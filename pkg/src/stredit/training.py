"""Expectation-maximization for memoryless edit models.

The expectation step accumulates posterior expected usage counts of
every edit operation on a string pair via the forward and backward
lattices; the maximization step renormalizes the counts into a new
model.  Expectations are additive, so a corpus may be split across
workers with one private accumulator each and the partial accumulators
merged by addition before the maximization step.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .alphabet import Alphabet, EditOp
from .errors import ConfigurationError, TrainingError
from .transducer import (
    LN2,
    NEG_INF,
    Transducer,
    _backward_rows,
    _forward_rows,
    viterbi_distance,
)

PairCorpus = Sequence[tuple[Sequence[str], Sequence[str]]]


@dataclass
class TrainOptions:
    """Knobs for the iterative trainer.

    ``threshold`` is the relative change in corpus log likelihood below
    which training stops; ``smoothing`` is added to every edit-operation
    count (not the end-marker count) when an accumulator is initialized.
    ``expectation`` selects full posterior expectations or counts from
    the single best alignment only.
    """

    max_iterations: int = 10
    threshold: float = 1e-6
    smoothing: float = 0.0
    expectation: str = "full"
    tying: "TyingScheme | None" = None
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be at least 1")
        if self.threshold < 0:
            raise ConfigurationError("convergence threshold must be nonnegative")
        if self.smoothing < 0:
            raise ConfigurationError("smoothing must be nonnegative")
        if self.expectation not in ("full", "viterbi"):
            raise ConfigurationError("expectation must be 'full' or 'viterbi'")
        if self.n_jobs < 1:
            raise ConfigurationError("n_jobs must be at least 1")


class EditAccumulator:
    """Expected-count table mirroring a model's parameter layout.

    The end-marker count grows by exactly the step weight for every
    successfully processed pair; pairs with zero probability are skipped
    and tallied in ``skipped``.
    """

    __slots__ = ("source_alphabet", "target_alphabet", "substitution", "deletion",
                 "insertion", "end", "skipped")

    def __init__(
        self,
        source_alphabet: Alphabet,
        target_alphabet: Alphabet,
        smoothing: float = 0.0,
    ):
        if smoothing < 0:
            raise ConfigurationError("smoothing must be nonnegative")
        self.source_alphabet = source_alphabet
        self.target_alphabet = target_alphabet
        self.substitution = np.full((len(source_alphabet), len(target_alphabet)), smoothing)
        self.deletion = np.full(len(source_alphabet), smoothing)
        self.insertion = np.full(len(target_alphabet), smoothing)
        self.end = 0.0
        self.skipped = 0

    def add(self, op: EditOp, weight: float) -> None:
        if op.is_terminator:
            self.end += weight
        elif op.is_substitution:
            self.substitution[
                self.source_alphabet.index(op.source), self.target_alphabet.index(op.target)
            ] += weight
        elif op.is_deletion:
            self.deletion[self.source_alphabet.index(op.source)] += weight
        else:
            self.insertion[self.target_alphabet.index(op.target)] += weight

    def count(self, op: EditOp) -> float:
        if op.is_terminator:
            return self.end
        if op.is_substitution:
            return float(
                self.substitution[
                    self.source_alphabet.index(op.source), self.target_alphabet.index(op.target)
                ]
            )
        if op.is_deletion:
            return float(self.deletion[self.source_alphabet.index(op.source)])
        return float(self.insertion[self.target_alphabet.index(op.target)])

    def edit_total(self) -> float:
        """Total expected count over edit operations, end marker excluded."""
        return float(self.substitution.sum() + self.deletion.sum() + self.insertion.sum())

    def total(self) -> float:
        return self.edit_total() + self.end

    def merge(self, other: "EditAccumulator") -> "EditAccumulator":
        """Add another accumulator's expectations into this one."""
        if (
            other.source_alphabet != self.source_alphabet
            or other.target_alphabet != self.target_alphabet
        ):
            raise ConfigurationError("cannot merge accumulators over different alphabets")
        self.substitution += other.substitution
        self.deletion += other.deletion
        self.insertion += other.insertion
        self.end += other.end
        self.skipped += other.skipped
        return self


def expectation_step(
    x: Sequence[str],
    y: Sequence[str],
    transducer: Transducer,
    accumulator: EditAccumulator,
    weight: float = 1.0,
) -> float:
    """Add the weighted posterior expected operation counts for one pair.

    Returns the natural-log probability of the pair, or -inf when the
    pair is unreachable, in which case the accumulator is untouched
    except for its skip tally.  Accumulation is linear in ``weight``.
    """
    xs = transducer.source_alphabet.encode(x)
    ys = transducer.target_alphabet.encode(y)
    return _expectation_from_lattice(xs, ys, transducer, accumulator, weight, None)


def _expectation_from_lattice(xs, ys, transducer, accumulator, weight, fwd):
    # fwd may carry a precomputed forward lattice (without the end
    # factor) so callers that already evaluated the pair skip one pass
    if weight < 0:
        raise ConfigurationError("expectation weight must be nonnegative")
    sub, dele, ins = transducer._sub, transducer._del, transducer._ins
    if fwd is None:
        fwd = _forward_rows(xs, ys, sub, dele, ins)
    T, V = len(xs), len(ys)
    total = fwd[T][V] + transducer.log_termination
    if total == NEG_INF:
        accumulator.skipped += 1
        return NEG_INF
    bwd = _backward_rows(xs, ys, sub, dele, ins, transducer.log_termination)
    accumulator.end += weight
    if weight == 0.0:
        return total
    exp = math.exp
    acc_sub = accumulator.substitution
    acc_del = accumulator.deletion
    acc_ins = accumulator.insertion
    for t in range(T + 1):
        frow = fwd[t]
        brow = bwd[t]
        fprev = fwd[t - 1] if t > 0 else None
        if t > 0:
            xi = xs[t - 1]
            d = dele[xi]
            srow = sub[xi]
            for v in range(V + 1):
                b = brow[v]
                acc_del[xi] += weight * exp(fprev[v] + d + b - total)
                if v > 0:
                    acc_sub[xi][ys[v - 1]] += weight * exp(
                        fprev[v - 1] + srow[ys[v - 1]] + b - total
                    )
                    acc_ins[ys[v - 1]] += weight * exp(frow[v - 1] + ins[ys[v - 1]] + b - total)
        else:
            for v in range(1, V + 1):
                acc_ins[ys[v - 1]] += weight * exp(frow[v - 1] + ins[ys[v - 1]] + brow[v] - total)
    return total


def viterbi_expectation_step(
    x: Sequence[str],
    y: Sequence[str],
    transducer: Transducer,
    accumulator: EditAccumulator,
    weight: float = 1.0,
) -> float:
    """Add the operation counts of the single best alignment only.

    Ties are broken by the same substitution/deletion/insertion
    preference as the best-alignment distance.  Returns the natural-log
    probability of that alignment, or -inf on an unreachable pair.
    """
    if weight < 0:
        raise ConfigurationError("expectation weight must be nonnegative")
    bits, alignment = viterbi_distance(x, y, transducer)
    if alignment is None:
        accumulator.skipped += 1
        return NEG_INF
    for op in alignment.ops:
        accumulator.add(op, weight)
    return -bits * LN2


def maximization_step(accumulator: EditAccumulator) -> Transducer:
    """Turn expected counts into a new model by renormalization."""
    total = accumulator.total()
    if total <= 0.0:
        raise TrainingError("no expectations accumulated; cannot renormalize")
    log_total = math.log(total)
    with np.errstate(divide="ignore"):
        return Transducer(
            accumulator.source_alphabet,
            accumulator.target_alphabet,
            np.log(accumulator.substitution) - log_total,
            np.log(accumulator.deletion) - log_total,
            np.log(accumulator.insertion) - log_total,
            (math.log(accumulator.end) - log_total) if accumulator.end > 0 else NEG_INF,
        )


@dataclass(frozen=True)
class TyingScheme:
    """A partition of the edit operations into shared-probability classes.

    After each maximization step, the probability mass of every class is
    spread uniformly over its members, which reduces the number of free
    parameters.  The end marker is never tied.
    """

    classes: Mapping[EditOp, Hashable]

    def __post_init__(self) -> None:
        if any(op.is_terminator for op in self.classes):
            raise ConfigurationError("the end marker cannot be tied")

    @classmethod
    def four_class(cls, source_alphabet: Alphabet, target_alphabet: Alphabet) -> "TyingScheme":
        """Identity, substitution, deletion, and insertion classes.

        Identity means the same token on both sides, so it only arises
        for symbols the two alphabets share.
        """
        mapping: dict[EditOp, str] = {}
        for a in source_alphabet:
            for b in target_alphabet:
                mapping[EditOp(a, b)] = "identity" if a == b else "substitute"
        for a in source_alphabet:
            mapping[EditOp(a, None)] = "delete"
        for b in target_alphabet:
            mapping[EditOp(None, b)] = "insert"
        return cls(mapping)

    def validate_for(self, source_alphabet: Alphabet, target_alphabet: Alphabet) -> None:
        expected = set()
        for a in source_alphabet:
            for b in target_alphabet:
                expected.add(EditOp(a, b))
            expected.add(EditOp(a, None))
        for b in target_alphabet:
            expected.add(EditOp(None, b))
        given = set(self.classes)
        if given != expected:
            missing = expected - given
            extra = given - expected
            detail = []
            if missing:
                detail.append(f"{len(missing)} operations unassigned")
            if extra:
                detail.append(f"{len(extra)} operations outside the alphabets")
            raise ConfigurationError("tying scheme is not a partition: " + ", ".join(detail))


def apply_tying(transducer: Transducer, scheme: TyingScheme) -> Transducer:
    """Spread each tying class's probability mass uniformly over its members."""
    scheme.validate_for(transducer.source_alphabet, transducer.target_alphabet)
    totals: dict[Hashable, float] = {}
    sizes: dict[Hashable, int] = {}
    for op, cls_id in scheme.classes.items():
        totals[cls_id] = totals.get(cls_id, 0.0) + transducer.probability(op)
        sizes[cls_id] = sizes.get(cls_id, 0) + 1
    A, B = transducer.source_alphabet, transducer.target_alphabet
    sub = np.empty((len(A), len(B)))
    dele = np.empty(len(A))
    ins = np.empty(len(B))
    for op, cls_id in scheme.classes.items():
        value = totals[cls_id] / sizes[cls_id]
        if op.is_substitution:
            sub[A.index(op.source), B.index(op.target)] = value
        elif op.is_deletion:
            dele[A.index(op.source)] = value
        else:
            ins[B.index(op.target)] = value
    with np.errstate(divide="ignore"):
        return Transducer(A, B, np.log(sub), np.log(dele), np.log(ins),
                          transducer.log_termination)


@dataclass
class TrainResult:
    """A trained model plus its per-iteration audit trail.

    ``log_likelihood`` holds the corpus log2 probability measured at the
    start of each iteration, before that iteration's parameter update;
    with full expectations and no skipped pairs it never decreases.
    ``skipped`` counts zero-probability pairs per iteration.
    """

    transducer: Transducer
    log_likelihood: list[float] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)


def _relative_change(previous: float, current: float) -> float:
    scale = max(1.0, abs(previous), abs(current))
    return abs(current - previous) / scale


def _corpus_expectation(step, pairs, model, options):
    """One expectation sweep; returns (accumulator, log2 likelihood, processed)."""

    def sweep(chunk):
        acc = EditAccumulator(
            model.source_alphabet, model.target_alphabet, options.smoothing
        )
        # smoothing belongs in the merged accumulator once, not per chunk
        acc.substitution[:] = 0.0
        acc.deletion[:] = 0.0
        acc.insertion[:] = 0.0
        ll = 0.0
        processed = 0
        for x, y in chunk:
            logp = step(x, y, model, acc, 1.0)
            if logp != NEG_INF:
                ll += logp
                processed += 1
        return acc, ll, processed

    accumulator = EditAccumulator(
        model.source_alphabet, model.target_alphabet, options.smoothing
    )
    if options.n_jobs == 1 or len(pairs) < 2 * options.n_jobs:
        acc, ll, processed = sweep(pairs)
        accumulator.merge(acc)
        return accumulator, ll / LN2, processed
    chunks = [pairs[i :: options.n_jobs] for i in range(options.n_jobs)]
    with ThreadPoolExecutor(max_workers=options.n_jobs) as pool:
        results = list(pool.map(sweep, chunks))
    ll = 0.0
    processed = 0
    for acc, chunk_ll, chunk_processed in results:  # merge in fixed chunk order
        accumulator.merge(acc)
        ll += chunk_ll
        processed += chunk_processed
    return accumulator, ll / LN2, processed


def train(
    transducer: Transducer,
    pairs: Iterable[tuple[Sequence[str], Sequence[str]]],
    options: TrainOptions | None = None,
) -> TrainResult:
    """Fit the edit model to a corpus of string pairs.

    Iterates expectation and maximization until the relative change in
    corpus log likelihood falls below the threshold or the iteration
    budget runs out.  Pairs with zero probability are skipped and
    tallied; if every pair is skipped, training fails.
    """
    options = options or TrainOptions()
    pairs = [(tuple(x), tuple(y)) for x, y in pairs]
    if not pairs:
        raise TrainingError("training corpus is empty")
    if options.tying is not None:
        options.tying.validate_for(transducer.source_alphabet, transducer.target_alphabet)
    step = expectation_step if options.expectation == "full" else viterbi_expectation_step
    result = TrainResult(transducer)
    model = transducer
    for _ in range(options.max_iterations):
        accumulator, ll_bits, processed = _corpus_expectation(step, pairs, model, options)
        if processed == 0:
            raise TrainingError("every training pair has zero probability")
        result.log_likelihood.append(ll_bits)
        result.skipped.append(accumulator.skipped)
        if (
            len(result.log_likelihood) > 1
            and _relative_change(result.log_likelihood[-2], result.log_likelihood[-1])
            <= options.threshold
        ):
            break
        model = maximization_step(accumulator)
        if options.tying is not None:
            model = apply_tying(model, options.tying)
        result.transducer = model
    return result
