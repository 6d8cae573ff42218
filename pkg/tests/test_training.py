import math

import numpy as np
import pytest

from stredit import (
    Alphabet,
    ConfigurationError,
    EditAccumulator,
    EditOp,
    TERMINATE,
    TrainOptions,
    TrainingError,
    Transducer,
    apply_tying,
    expectation_step,
    joint_probability,
    maximization_step,
    train,
    TyingScheme,
    viterbi_expectation_step,
)
from stredit.transducer import NEG_INF

from conftest import random_alphabet_pair, random_strings
from oracles import brute_expected_counts

A1, B1 = Alphabet(["a"]), Alphabet(["b"])


class TestExpectationStep:
    def test_posterior_counts_single_pair(self, ab_uniform):
        acc = EditAccumulator(A1, B1)
        logp = expectation_step(("a",), ("b",), ab_uniform, acc)
        assert math.exp(logp) == pytest.approx(3 / 32, rel=1e-12)
        assert acc.end == pytest.approx(1.0, abs=0)
        assert acc.count(EditOp("a", "b")) == pytest.approx(2 / 3, rel=1e-12)
        assert acc.count(EditOp("a", None)) == pytest.approx(1 / 3, rel=1e-12)
        assert acc.count(EditOp(None, "b")) == pytest.approx(1 / 3, rel=1e-12)

    def test_zero_weight_changes_nothing(self, ab_uniform):
        acc = EditAccumulator(A1, B1)
        expectation_step(("a",), ("b",), ab_uniform, acc, weight=0.0)
        assert acc.total() == 0.0 and acc.skipped == 0

    def test_weight_is_linear(self, ab_uniform):
        one = EditAccumulator(A1, B1)
        expectation_step(("a",), ("b",), ab_uniform, one, weight=0.3)
        expectation_step(("a",), ("b",), ab_uniform, one, weight=0.7)
        other = EditAccumulator(A1, B1)
        expectation_step(("a",), ("b",), ab_uniform, other, weight=1.0)
        for op in (EditOp("a", "b"), EditOp("a", None), EditOp(None, "b"), TERMINATE):
            assert one.count(op) == pytest.approx(other.count(op), rel=1e-12)

    def test_unreachable_pair_is_skipped(self, abb_cc_model):
        acc = EditAccumulator(abb_cc_model.source_alphabet, abb_cc_model.target_alphabet)
        logp = expectation_step(("a",), ("c",), abb_cc_model, acc)
        assert logp == NEG_INF
        assert acc.skipped == 1
        assert acc.total() == 0.0

    def test_counts_match_enumeration(self, rng):
        for _ in range(200):
            A, B = random_alphabet_pair(rng)
            t = Transducer.random(A, B, rng)
            x = random_strings(rng, A, 4, 1)[0]
            y = random_strings(rng, B, 4, 1)[0]
            acc = EditAccumulator(A, B)
            expectation_step(x, y, t, acc)
            expected, total = brute_expected_counts(x, y, t)
            assert total > 0
            for op in t.edit_ops():
                key = (
                    ("sub", op.source, op.target)
                    if op.is_substitution
                    else (("del", op.source) if op.is_deletion else ("ins", op.target))
                )
                assert acc.count(op) == pytest.approx(
                    expected.get(key, 0.0), rel=1e-10, abs=1e-12
                )

    def test_count_conservation(self, rng):
        # total edit-operation mass equals the posterior-expected length
        for _ in range(100):
            A, B = random_alphabet_pair(rng)
            t = Transducer.random(A, B, rng)
            x = random_strings(rng, A, 4, 1)[0]
            y = random_strings(rng, B, 4, 1)[0]
            acc = EditAccumulator(A, B)
            expectation_step(x, y, t, acc)
            expected, _ = brute_expected_counts(x, y, t)
            brute_length = math.fsum(v for k, v in expected.items() if k != ("end",))
            assert acc.edit_total() == pytest.approx(brute_length, rel=1e-10, abs=1e-12)


class TestViterbiExpectationStep:
    def test_best_alignment_counts(self, ab_uniform):
        acc = EditAccumulator(A1, B1)
        viterbi_expectation_step(("a",), ("b",), ab_uniform, acc)
        assert acc.count(EditOp("a", "b")) == 1.0
        assert acc.end == 1.0
        assert acc.count(EditOp("a", None)) == 0.0
        assert acc.count(EditOp(None, "b")) == 0.0

    def test_matches_full_step_when_one_alignment_survives(self, abb_cc_model):
        full = EditAccumulator(abb_cc_model.source_alphabet, abb_cc_model.target_alphabet)
        best = EditAccumulator(abb_cc_model.source_alphabet, abb_cc_model.target_alphabet)
        pair = (("a", "b", "b"), ("c", "c"))
        expectation_step(*pair, abb_cc_model, full)
        viterbi_expectation_step(*pair, abb_cc_model, best)
        for op in list(abb_cc_model.edit_ops()) + [TERMINATE]:
            assert full.count(op) == pytest.approx(best.count(op), rel=1e-12, abs=1e-12)

    def test_weight_scaling(self, ab_uniform):
        acc = EditAccumulator(A1, B1)
        viterbi_expectation_step(("a",), ("b",), ab_uniform, acc, weight=2.5)
        assert acc.count(EditOp("a", "b")) == 2.5
        assert acc.end == 2.5


class TestMaximizationStep:
    def test_relative_counts(self):
        acc = EditAccumulator(A1, B1)
        acc.end = 1.0
        acc.add(EditOp("a", "b"), 2 / 3)
        acc.add(EditOp("a", None), 1 / 3)
        acc.add(EditOp(None, "b"), 1 / 3)
        t = maximization_step(acc)
        assert t.probability(TERMINATE) == pytest.approx(3 / 7, rel=1e-12)
        assert t.probability(EditOp("a", "b")) == pytest.approx(2 / 7, rel=1e-12)
        assert t.probability(EditOp("a", None)) == pytest.approx(1 / 7, rel=1e-12)

    def test_uniform_counts_give_uniform_model(self):
        acc = EditAccumulator(A1, B1)
        acc.end = 1.0
        for op in (EditOp("a", "b"), EditOp("a", None), EditOp(None, "b")):
            acc.add(op, 1.0)
        t = maximization_step(acc)
        for op in (EditOp("a", "b"), EditOp("a", None), EditOp(None, "b"), TERMINATE):
            assert t.probability(op) == pytest.approx(0.25, rel=1e-12)

    def test_all_mass_on_end(self):
        acc = EditAccumulator(A1, B1)
        acc.end = 5.0
        t = maximization_step(acc)
        assert t.probability(TERMINATE) == pytest.approx(1.0, abs=0)

    def test_empty_accumulator_fails(self):
        with pytest.raises(TrainingError):
            maximization_step(EditAccumulator(A1, B1))

    def test_normalization_after_update(self, rng):
        for _ in range(50):
            A, B = random_alphabet_pair(rng)
            t = Transducer.random(A, B, rng)
            acc = EditAccumulator(A, B)
            x = random_strings(rng, A, 5, 1)[0]
            y = random_strings(rng, B, 5, 1)[0]
            if expectation_step(x, y, t, acc) == NEG_INF:
                continue
            updated = maximization_step(acc)
            assert updated.validate().is_distribution


class TestAccumulatorMerge:
    def test_merge_is_addition(self, ab_uniform):
        split_a = EditAccumulator(A1, B1)
        split_b = EditAccumulator(A1, B1)
        joint = EditAccumulator(A1, B1)
        pairs = [(("a",), ("b",)), ((), ("b",)), (("a", "a"), ())]
        for x, y in pairs[:2]:
            expectation_step(x, y, ab_uniform, split_a)
        for x, y in pairs[2:]:
            expectation_step(x, y, ab_uniform, split_b)
        for x, y in pairs:
            expectation_step(x, y, ab_uniform, joint)
        split_a.merge(split_b)
        for op in (EditOp("a", "b"), EditOp("a", None), EditOp(None, "b"), TERMINATE):
            assert split_a.count(op) == pytest.approx(joint.count(op), rel=1e-12)


class TestTying:
    def test_four_class_spreads_mass(self):
        A = Alphabet(["a", "b"])
        t = Transducer.from_probabilities(
            A,
            A,
            {
                EditOp("a", "a"): 0.10,
                EditOp("b", "b"): 0.30,
                EditOp("a", "b"): 0.05,
                EditOp("b", "a"): 0.15,
                EditOp("a", None): 0.02,
                EditOp("b", None): 0.08,
                EditOp(None, "a"): 0.04,
                EditOp(None, "b"): 0.06,
            },
            termination=0.20,
        )
        tied = apply_tying(t, TyingScheme.four_class(A, A))
        assert tied.probability(EditOp("a", "a")) == pytest.approx(0.20)
        assert tied.probability(EditOp("b", "b")) == pytest.approx(0.20)
        assert tied.probability(EditOp("a", "b")) == pytest.approx(0.10)
        assert tied.probability(EditOp("b", "a")) == pytest.approx(0.10)
        assert tied.probability(EditOp("a", None)) == pytest.approx(0.05)
        assert tied.probability(EditOp(None, "a")) == pytest.approx(0.05)
        assert tied.probability(TERMINATE) == pytest.approx(0.20)
        assert tied.validate().is_distribution

    def test_singleton_classes_are_identity(self, ab_uniform):
        scheme = TyingScheme({op: op for op in ab_uniform.edit_ops()})
        tied = apply_tying(ab_uniform, scheme)
        for op in ab_uniform.edit_ops():
            assert tied.probability(op) == pytest.approx(ab_uniform.probability(op), abs=0)

    def test_zero_class_total_gives_zero_members(self, abb_cc_model):
        A, B = abb_cc_model.source_alphabet, abb_cc_model.target_alphabet
        tied = apply_tying(abb_cc_model, TyingScheme.four_class(A, B))
        # no insertion mass anywhere, so the whole insertion class stays zero
        assert tied.probability(EditOp(None, "c")) == 0.0

    def test_idempotent(self, rng):
        A, B = Alphabet(["a", "b"]), Alphabet(["b", "c"])
        t = Transducer.random(A, B, rng)
        scheme = TyingScheme.four_class(A, B)
        once = apply_tying(t, scheme)
        twice = apply_tying(once, scheme)
        for op in t.edit_ops():
            assert once.probability(op) == pytest.approx(twice.probability(op), rel=1e-12)

    def test_incomplete_partition_rejected(self):
        A, B = Alphabet(["a"]), Alphabet(["b"])
        with pytest.raises(ConfigurationError):
            apply_tying(Transducer.uniform(A, B), TyingScheme({EditOp("a", "b"): 0}))
        with pytest.raises(ConfigurationError):
            TyingScheme({TERMINATE: 0})


FIXED_POINTS = {
    # attainable limits of training on the single pair (abb, cc), as
    # edit probabilities normalized over the edit operations only
    "global": {("a", None): 1 / 3, ("b", "c"): 2 / 3},
    "two-path": {("a", "c"): 1 / 3, ("b", "c"): 1 / 3, ("b", None): 1 / 3},
    "three-path": {("a", "c"): 2 / 9, ("b", "c"): 4 / 9, ("a", None): 1 / 9, ("b", None): 2 / 9},
}
FIXED_POINT_BITS = {"global": 6.0, "two-path": 7.0, "three-path": math.log2(144)}


def classify_fixed_point(transducer, tolerance=1e-6):
    edit_mass = 1.0 - transducer.probability(TERMINATE)
    normalized = {
        (op.source, op.target): transducer.probability(op) / edit_mass
        for op in transducer.edit_ops()
    }
    for name, reference in FIXED_POINTS.items():
        if all(
            abs(normalized.get(key, 0.0) - value) <= tolerance
            for key in set(normalized) | set(reference)
            for value in [reference.get(key, 0.0)]
        ):
            return name
    return None


class TestSinglePairTraining:
    CORPUS = [(("a", "b", "b"), ("c", "c"))]

    def test_three_attainable_fixed_points(self):
        A, B = Alphabet(["a", "b"]), Alphabet(["c"])
        rng = np.random.default_rng(11)
        seen = set()
        for _ in range(60):
            start = Transducer.random(A, B, rng)
            result = train(start, self.CORPUS, TrainOptions(max_iterations=300, threshold=0.0))
            name = classify_fixed_point(result.transducer)
            assert name is not None
            seen.add(name)
            assert -result.log_likelihood[-1] == pytest.approx(
                FIXED_POINT_BITS[name], abs=1e-6
            )
        assert {"global", "two-path"} <= seen

    def test_symmetric_start_reaches_third_maximum(self):
        A, B = Alphabet(["a", "b"]), Alphabet(["c"])
        result = train(
            Transducer.uniform(A, B), self.CORPUS, TrainOptions(max_iterations=300, threshold=0.0)
        )
        assert classify_fixed_point(result.transducer) == "three-path"
        assert -result.log_likelihood[-1] == pytest.approx(math.log2(144), abs=1e-9)
        assert result.transducer.probability(TERMINATE) == pytest.approx(0.25, abs=1e-9)

    def test_fixed_points_are_stationary(self):
        A, B = Alphabet(["a", "b"]), Alphabet(["c"])
        models = {
            "global": {EditOp("a", None): 0.25, EditOp("b", "c"): 0.5},
            "two-path": {EditOp("a", "c"): 0.25, EditOp("b", "c"): 0.25, EditOp("b", None): 0.25},
            "three-path": {
                EditOp("a", "c"): 2 / 9 * 0.75,
                EditOp("b", "c"): 4 / 9 * 0.75,
                EditOp("a", None): 1 / 9 * 0.75,
                EditOp("b", None): 2 / 9 * 0.75,
            },
        }
        for name, probs in models.items():
            t = Transducer.from_probabilities(A, B, probs, termination=0.25)
            acc = EditAccumulator(A, B)
            expectation_step(("a", "b", "b"), ("c", "c"), t, acc)
            updated = maximization_step(acc)
            for op in list(t.edit_ops()) + [TERMINATE]:
                assert updated.probability(op) == pytest.approx(
                    t.probability(op), abs=1e-9
                ), name


class TestTrain:
    def test_single_iteration_equals_one_e_m_cycle(self, rng):
        A, B = Alphabet(["a", "b"]), Alphabet(["c"])
        pairs = [(("a", "b"), ("c",)), (("b",), ("c", "c"))]
        start = Transducer.random(A, B, rng)
        result = train(start, pairs, TrainOptions(max_iterations=1))
        acc = EditAccumulator(A, B)
        for x, y in pairs:
            expectation_step(x, y, start, acc)
        manual = maximization_step(acc)
        for op in list(start.edit_ops()) + [TERMINATE]:
            assert result.transducer.probability(op) == pytest.approx(
                manual.probability(op), rel=1e-12
            )

    def test_log_likelihood_is_monotone(self, rng):
        A, B = Alphabet(["a", "b", "c"]), Alphabet(["a", "b"])
        pairs = list(zip(random_strings(rng, A, 6, 20), random_strings(rng, B, 6, 20)))
        result = train(Transducer.uniform(A, B), pairs, TrainOptions(max_iterations=10))
        lls = result.log_likelihood
        assert len(lls) >= 2
        for earlier, later in zip(lls, lls[1:]):
            assert later >= earlier - 1e-9

    def test_viterbi_mode_trains(self, rng):
        A, B = Alphabet(["a", "b"]), Alphabet(["a", "b"])
        pairs = list(zip(random_strings(rng, A, 5, 15), random_strings(rng, B, 5, 15)))
        result = train(
            Transducer.uniform(A, B),
            pairs,
            TrainOptions(max_iterations=8, expectation="viterbi"),
        )
        assert result.transducer.validate().is_distribution
        for earlier, later in zip(result.log_likelihood, result.log_likelihood[1:]):
            assert later >= earlier - 1e-9

    def test_empty_corpus_fails(self, ab_uniform):
        with pytest.raises(TrainingError):
            train(ab_uniform, [])

    def test_all_pairs_unreachable_fails(self, abb_cc_model):
        with pytest.raises(TrainingError):
            train(abb_cc_model, [(("a",), ("c",))])

    def test_skipped_pairs_are_counted(self, abb_cc_model):
        pairs = [(("a", "b", "b"), ("c", "c")), (("a",), ("c",))]
        result = train(abb_cc_model, pairs, TrainOptions(max_iterations=2))
        assert result.skipped[0] == 1

    def test_tying_applied_each_iteration(self, rng):
        A = Alphabet(["a", "b"])
        pairs = list(zip(random_strings(rng, A, 5, 12), random_strings(rng, A, 5, 12)))
        scheme = TyingScheme.four_class(A, A)
        result = train(
            Transducer.uniform(A, A),
            pairs,
            TrainOptions(max_iterations=5, tying=scheme),
        )
        t = result.transducer
        # within each class all probabilities are equal
        assert t.probability(EditOp("a", "b")) == pytest.approx(
            t.probability(EditOp("b", "a")), rel=1e-12
        )
        assert t.probability(EditOp("a", "a")) == pytest.approx(
            t.probability(EditOp("b", "b")), rel=1e-12
        )
        assert t.probability(EditOp("a", None)) == pytest.approx(
            t.probability(EditOp("b", None)), rel=1e-12
        )

    def test_smoothing_keeps_unseen_operations_alive(self):
        A, B = Alphabet(["a", "b"]), Alphabet(["c"])
        pairs = [(("a",), ("c",))]
        unsmoothed = train(Transducer.uniform(A, B), pairs, TrainOptions(max_iterations=3))
        smoothed = train(
            Transducer.uniform(A, B), pairs, TrainOptions(max_iterations=3, smoothing=0.01)
        )
        assert unsmoothed.transducer.probability(EditOp("b", "c")) == 0.0
        assert smoothed.transducer.probability(EditOp("b", "c")) > 0.0

    def test_parallel_partition_is_deterministic(self, rng):
        A, B = Alphabet(["a", "b"]), Alphabet(["a", "c"])
        pairs = list(zip(random_strings(rng, A, 5, 30), random_strings(rng, B, 5, 30)))
        serial = train(Transducer.uniform(A, B), pairs, TrainOptions(max_iterations=4))
        once = train(
            Transducer.uniform(A, B), pairs, TrainOptions(max_iterations=4, n_jobs=3)
        )
        again = train(
            Transducer.uniform(A, B), pairs, TrainOptions(max_iterations=4, n_jobs=3)
        )
        for op in list(serial.transducer.edit_ops()) + [TERMINATE]:
            assert once.transducer.probability(op) == again.transducer.probability(op)
            assert once.transducer.probability(op) == pytest.approx(
                serial.transducer.probability(op), rel=1e-9
            )

    def test_corpus_probability_improves(self, rng):
        A = Alphabet(["a", "b"])
        pairs = [(("a", "a", "b"), ("a", "b")), (("b", "a"), ("b", "a", "a"))]
        start = Transducer.uniform(A, A)
        result = train(start, pairs, TrainOptions(max_iterations=10))
        before = math.fsum(math.log(joint_probability(x, y, start)) for x, y in pairs)
        after = math.fsum(
            math.log(joint_probability(x, y, result.transducer)) for x, y in pairs
        )
        assert after > before


class TestTrainOptionsValidation:
    def test_bad_values_rejected(self):
        for kwargs in (
            {"max_iterations": 0},
            {"threshold": -1.0},
            {"smoothing": -0.1},
            {"expectation": "best"},
            {"n_jobs": 0},
        ):
            with pytest.raises(ConfigurationError):
                TrainOptions(**kwargs)
