import math

import pytest

from stredit import (
    Alphabet,
    ClassifierModel,
    ClassifierTrainOptions,
    ConfigurationError,
    EditAccumulator,
    EditOp,
    InputError,
    Lexicon,
    LexiconAccumulator,
    TrainingError,
    Transducer,
    UtilityFunction,
    add_word,
    class_log_joints,
    class_posteriors,
    classifier_expectation_step,
    classifier_maximization_step,
    classify,
    classify_mixed,
    evaluate_classifier,
    flat_training_pairs,
    initial_classifier,
    joint_probability,
    levenshtein_rule,
    nearest_neighbor_classify,
    stochastic_rule,
    train_classifier,
    word_error_rate,
)
from stredit.classifier import Decision
from stredit.transducer import NEG_INF

from conftest import random_strings
from oracles import brute_class_joint

A2 = Alphabet(["a", "b"])


def uniform_model(entries, **kwargs):
    return initial_classifier(A2, A2, entries, **kwargs)


class TestLexicon:
    def test_normalization_enforced(self):
        with pytest.raises(ConfigurationError):
            Lexicon(A2, {("w", ("a",)): 0.5})
        with pytest.raises(ConfigurationError):
            Lexicon(A2, {})

    def test_marginals_and_conditionals(self):
        lex = Lexicon(
            A2,
            {
                ("v", ("a",)): 0.2,
                ("v", ("b",)): 0.3,
                ("w", ("a",)): 0.5,
            },
        )
        assert lex.word_marginal("v") == pytest.approx(0.5)
        assert lex.form_marginal(("a",)) == pytest.approx(0.7)
        assert lex.word_given_form("w", ("a",)) == pytest.approx(5 / 7)
        assert lex.form_given_word(("b",), "v") == pytest.approx(0.6)
        assert lex.word_given_form("w", ("b",)) == 0.0
        assert len(lex) == 3 and ("v", ("a",)) in lex

    def test_uniform_product_weights_words_equally(self):
        lex = Lexicon.uniform_product(
            A2, [("v", ("a",)), ("v", ("b",)), ("w", ("a", "a"))]
        )
        # each word gets half the mass regardless of its prototype count
        assert lex.word_marginal("v") == pytest.approx(0.5)
        assert lex.word_marginal("w") == pytest.approx(0.5)
        assert lex.probability("v", ("a",)) == pytest.approx(0.25)
        assert lex.probability("w", ("a", "a")) == pytest.approx(0.5)

    def test_from_corpus_frequencies(self):
        samples = [("v", ("a",)), ("v", ("a",)), ("w", ("b",))]
        lex = Lexicon.from_corpus(A2, samples)
        assert lex.probability("v", ("a",)) == pytest.approx(2 / 3)
        assert lex.probability("w", ("b",)) == pytest.approx(1 / 3)
        assert len(lex) == 2  # duplicates collapse

    def test_from_corpus_single_sample(self):
        lex = Lexicon.from_corpus(A2, [("v", ("a", "b"))])
        assert lex.probability("v", ("a", "b")) == pytest.approx(1.0)

    def test_from_corpus_empty_fails(self):
        with pytest.raises(TrainingError):
            Lexicon.from_corpus(A2, [])

    def test_unknown_prototype_symbol_rejected(self):
        with pytest.raises(InputError):
            Lexicon(A2, {("w", ("z",)): 1.0})


class TestClassPosteriors:
    def test_single_word_gets_everything(self):
        model = uniform_model([("w", ("a",))])
        posterior = class_posteriors(("a",), model)
        assert posterior == {"w": pytest.approx(1.0)}

    def test_shared_form_splits_evenly(self):
        model = uniform_model([("v", ("a",)), ("w", ("a",))])
        posterior = class_posteriors(("a", "b"), model)
        assert posterior["v"] == pytest.approx(0.5)
        assert posterior["w"] == pytest.approx(0.5)

    def test_sum_to_one(self, rng):
        entries = [("v", ("a",)), ("v", ("b", "a")), ("w", ("b",)), ("u", ("a", "a"))]
        model = ClassifierModel(
            Transducer.random(A2, A2, rng),
            Lexicon.uniform_product(A2, entries),
        )
        for y in random_strings(rng, A2, 4, 20):
            posterior = class_posteriors(y, model)
            assert math.fsum(posterior.values()) == pytest.approx(1.0, rel=1e-9)

    def test_joint_adds_over_prototypes(self, rng):
        entries = [("v", ("a",)), ("v", ("b", "b")), ("w", ("a", "b"))]
        model = ClassifierModel(
            Transducer.random(A2, A2, rng), Lexicon.uniform_product(A2, entries)
        )
        for y in random_strings(rng, A2, 3, 10):
            joints = class_log_joints(y, model)
            for word in ("v", "w"):
                assert math.exp(joints[word]) == pytest.approx(
                    brute_class_joint(word, y, model), rel=1e-10
                )

    def test_viterbi_reading(self, rng):
        entries = [("v", ("a",)), ("w", ("b", "b"))]
        model = ClassifierModel(
            Transducer.random(A2, A2, rng), Lexicon.uniform_product(A2, entries)
        )
        y = ("a", "b")
        joints = class_log_joints(y, model, kind="viterbi")
        for word in ("v", "w"):
            assert math.exp(joints[word]) == pytest.approx(
                brute_class_joint(word, y, model, kind="viterbi"), rel=1e-10
            )


class TestClassify:
    def test_unambiguous_case_is_singleton(self, rng):
        # identity-heavy channel: the exact-match word wins
        t = Transducer.from_probabilities(
            A2,
            A2,
            {
                EditOp("a", "a"): 0.35,
                EditOp("b", "b"): 0.35,
                EditOp("a", "b"): 0.05,
                EditOp("b", "a"): 0.05,
                EditOp("a", None): 0.02,
                EditOp("b", None): 0.02,
                EditOp(None, "a"): 0.03,
                EditOp(None, "b"): 0.03,
            },
            termination=0.10,
        )
        lexicon = Lexicon.uniform_product(A2, [("v", ("a", "a")), ("w", ("b", "b"))])
        decision = classify(("a", "a"), ClassifierModel(t, lexicon))
        assert decision.words == ("v",)
        assert decision.entries == (("v", ("a", "a")),)

    def test_equal_homophones_both_returned(self):
        model = uniform_model([("v", ("a",)), ("w", ("a",))])
        decision = classify(("a",), model)
        assert decision.words == ("v", "w")
        assert decision.score == pytest.approx(0.5)

    def test_identity_utility_reproduces_plain_rule(self, rng):
        entries = [("v", ("a",)), ("w", ("b", "b")), ("u", ("a", "b"))]
        model = ClassifierModel(
            Transducer.random(A2, A2, rng), Lexicon.uniform_product(A2, entries)
        )
        utility = UtilityFunction.identity(["v", "w", "u"])
        for y in random_strings(rng, A2, 3, 15):
            plain = classify(y, model)
            with_utility = classify(y, model, utility=utility)
            assert plain.entries == with_utility.entries

    def test_no_decision_when_nothing_is_reachable(self):
        t = Transducer.from_probabilities(
            A2, A2, {EditOp("a", "a"): 0.9}, termination=0.1
        )
        lexicon = Lexicon.uniform_product(A2, [("w", ("a",))])
        decision = classify(("b",), ClassifierModel(t, lexicon))
        assert decision.is_no_decision
        assert decision.credit("w") == 0.0

    def test_empty_lexicon_impossible_but_empty_posterior_guarded(self):
        with pytest.raises(ConfigurationError):
            Lexicon.uniform_product(A2, [])


class TestExpectationStep:
    def test_single_prototype_gets_unit_weight(self):
        model = uniform_model([("w", ("a",))])
        edit_acc = EditAccumulator(A2, A2)
        lex_acc = LexiconAccumulator(model.lexicon, 0.0)
        logp = classifier_expectation_step("w", ("a", "b"), model, edit_acc, lex_acc)
        assert lex_acc.counts[("w", ("a",))] == pytest.approx(1.0, abs=0)
        assert edit_acc.end == pytest.approx(1.0, abs=0)
        # the step's value is the joint p(w, y)
        expected = model.lexicon.word_given_form("w", ("a",)) * joint_probability(
            ("a",), ("a", "b"), model.transducer
        )
        assert math.exp(logp) == pytest.approx(expected, rel=1e-12)

    def test_symmetric_prototypes_split_evenly(self):
        # same length, uniform edit model: both prototypes explain y equally
        model = uniform_model([("w", ("a",)), ("w", ("b",))])
        edit_acc = EditAccumulator(A2, A2)
        lex_acc = LexiconAccumulator(model.lexicon, 0.0)
        classifier_expectation_step("w", ("a",), model, edit_acc, lex_acc)
        assert lex_acc.counts[("w", ("a",))] == pytest.approx(0.5, rel=1e-12)
        assert lex_acc.counts[("w", ("b",))] == pytest.approx(0.5, rel=1e-12)

    def test_posterior_matches_brute_force(self, rng):
        entries = [("w", ("a",)), ("w", ("b", "b")), ("w", ("a", "b")), ("v", ("b",))]
        model = ClassifierModel(
            Transducer.random(A2, A2, rng), Lexicon.uniform_product(A2, entries)
        )
        for y in random_strings(rng, A2, 3, 10):
            edit_acc = EditAccumulator(A2, A2)
            lex_acc = LexiconAccumulator(model.lexicon, 0.0)
            classifier_expectation_step("w", y, model, edit_acc, lex_acc)
            # reference: p(x | w, y) from the enumerated joint of each entry
            joints = {
                form: model.lexicon.word_given_form("w", form)
                * joint_probability(form, y, model.transducer)
                for form, _ in model.lexicon.forms("w")
            }
            total = math.fsum(joints.values())
            for form, joint in joints.items():
                assert lex_acc.counts[("w", form)] == pytest.approx(
                    joint / total, rel=1e-10
                )

    def test_out_of_lexicon_word_is_skipped(self):
        model = uniform_model([("w", ("a",))])
        edit_acc = EditAccumulator(A2, A2)
        lex_acc = LexiconAccumulator(model.lexicon, 0.0)
        logp = classifier_expectation_step("novel", ("a",), model, edit_acc, lex_acc)
        assert logp == NEG_INF
        assert lex_acc.skipped == 1
        assert edit_acc.total() == 0.0


class TestMaximizationStep:
    def _accumulators(self, model, counts):
        edit_acc = EditAccumulator(A2, A2)
        edit_acc.end = 1.0
        edit_acc.add(EditOp("a", "a"), 1.0)
        lex_acc = LexiconAccumulator(model.lexicon, 0.0)
        for key, value in counts.items():
            lex_acc.counts[key] = value
        return edit_acc, lex_acc

    def test_equal_counts_give_uniform_lexicon(self):
        model = uniform_model([("v", ("a",)), ("w", ("b",))])
        edit_acc, lex_acc = self._accumulators(
            model, {("v", ("a",)): 2.0, ("w", ("b",)): 2.0}
        )
        updated = classifier_maximization_step(model, edit_acc, lex_acc)
        assert updated.lexicon.probability("v", ("a",)) == pytest.approx(0.5)
        assert updated.lexicon.probability("w", ("b",)) == pytest.approx(0.5)

    def test_both_switches_off_leave_lexicon_untouched(self):
        model = uniform_model(
            [("v", ("a",)), ("w", ("b",))], adapt_word=False, adapt_entry=False
        )
        edit_acc, lex_acc = self._accumulators(
            model, {("v", ("a",)): 3.0, ("w", ("b",)): 1.0}
        )
        updated = classifier_maximization_step(model, edit_acc, lex_acc)
        assert updated.lexicon is model.lexicon
        assert updated.transducer is not model.transducer

    def test_fixed_word_marginal_is_preserved(self):
        entries = [("v", ("a",)), ("v", ("b",)), ("w", ("b", "b"))]
        model = uniform_model(entries, adapt_word=False, adapt_entry=True)
        edit_acc, lex_acc = self._accumulators(
            model,
            {("v", ("a",)): 5.0, ("v", ("b",)): 1.0, ("w", ("b", "b")): 14.0},
        )
        updated = classifier_maximization_step(model, edit_acc, lex_acc)
        for word in ("v", "w"):
            assert updated.lexicon.word_marginal(word) == pytest.approx(
                model.lexicon.word_marginal(word), abs=1e-12
            )
        # conditionals did adapt
        assert updated.lexicon.form_given_word(("a",), "v") == pytest.approx(5 / 6)

    def test_fixed_conditional_is_preserved(self):
        entries = [("v", ("a",)), ("v", ("b",)), ("w", ("b", "b"))]
        model = uniform_model(entries, adapt_word=True, adapt_entry=False)
        edit_acc, lex_acc = self._accumulators(
            model,
            {("v", ("a",)): 5.0, ("v", ("b",)): 1.0, ("w", ("b", "b")): 14.0},
        )
        updated = classifier_maximization_step(model, edit_acc, lex_acc)
        assert updated.lexicon.form_given_word(("a",), "v") == pytest.approx(
            0.5, abs=1e-12
        )
        assert updated.lexicon.word_marginal("v") == pytest.approx(6 / 20)
        assert updated.lexicon.word_marginal("w") == pytest.approx(14 / 20)

    def test_smoothing_is_present_in_counts(self):
        model = uniform_model([("v", ("a",)), ("w", ("b",))])
        lex_acc = LexiconAccumulator(model.lexicon, 0.1)
        assert lex_acc.counts[("v", ("a",))] == 0.1
        assert lex_acc.total() == pytest.approx(0.2)


class TestTrainClassifier:
    def _corpus(self, rng, entries, n=40):
        lexicon = Lexicon.uniform_product(A2, entries)
        words = lexicon.words()
        samples = []
        for _ in range(n):
            word = words[int(rng.integers(0, len(words)))]
            samples.append((word, random_strings(rng, A2, 4, 1)[0]))
        return samples

    def test_monotone_joint_log_likelihood(self, rng):
        entries = [("v", ("a",)), ("v", ("b", "a")), ("w", ("b",))]
        model = uniform_model(entries)
        samples = self._corpus(rng, entries)
        result = train_classifier(model, samples, ClassifierTrainOptions(max_iterations=10))
        assert len(result.log_likelihood) >= 2
        for earlier, later in zip(result.log_likelihood, result.log_likelihood[1:]):
            assert later >= earlier - 1e-9

    def test_fix_word_invariance_across_iterations(self, rng):
        entries = [("v", ("a",)), ("v", ("b",)), ("w", ("b", "b"))]
        model = uniform_model(entries, adapt_word=False)
        samples = self._corpus(rng, entries)
        result = train_classifier(model, samples, ClassifierTrainOptions(max_iterations=5))
        for word in ("v", "w"):
            assert result.model.lexicon.word_marginal(word) == pytest.approx(
                model.lexicon.word_marginal(word), abs=1e-12
            )

    def test_lexicon_stays_normalized_every_iteration(self, rng):
        entries = [("v", ("a",)), ("w", ("b",)), ("w", ("a", "b"))]
        model = uniform_model(entries)
        samples = self._corpus(rng, entries)
        current = model
        for _ in range(5):
            result = train_classifier(
                current, samples, ClassifierTrainOptions(max_iterations=1)
            )
            current = result.model
            total = math.fsum(p for _, _, p in current.lexicon.entries())
            assert total == pytest.approx(1.0, rel=1e-9)
            assert current.transducer.validate().is_distribution

    def test_empty_corpus_fails(self):
        model = uniform_model([("w", ("a",))])
        with pytest.raises(TrainingError):
            train_classifier(model, [])

    def test_all_samples_skipped_fails(self):
        model = uniform_model([("w", ("a",))])
        with pytest.raises(TrainingError):
            train_classifier(model, [("unknown", ("a",))])

    def test_viterbi_expectation_rejected(self):
        with pytest.raises(ConfigurationError):
            ClassifierTrainOptions(expectation="viterbi")

    def test_training_reduces_error_on_learnable_task(self, rng):
        # channel: a<->b substitutions common; words distinguished by length
        entries = [("v", ("a", "a")), ("w", ("b", "b", "b"))]
        model = uniform_model(entries)
        samples = []
        for _ in range(60):
            word, form = entries[int(rng.integers(0, 2))]
            noisy = tuple("b" if (s == "a") == (rng.random() < 0.3) else "a" for s in form)
            samples.append((word, noisy))
        result = train_classifier(model, samples, ClassifierTrainOptions(max_iterations=10))
        before = evaluate_classifier(model, samples)
        after = evaluate_classifier(result.model, samples)
        assert after <= before


class TestAddWord:
    def test_scaling_rule(self):
        model = uniform_model([("v", ("a",)), ("w", ("b",))])
        updated = add_word(model, "u", ("a", "b"), 0.5)
        assert updated.lexicon.probability("u", ("a", "b")) == pytest.approx(0.5)
        assert updated.lexicon.probability("v", ("a",)) == pytest.approx(0.25)
        assert updated.lexicon.probability("w", ("b",)) == pytest.approx(0.25)
        total = math.fsum(p for _, _, p in updated.lexicon.entries())
        assert total == pytest.approx(1.0, rel=1e-12)
        assert updated.transducer is model.transducer

    def test_duplicate_entry_merges(self):
        model = uniform_model([("v", ("a",)), ("w", ("b",))])
        updated = add_word(model, "v", ("a",), 0.2)
        assert updated.lexicon.probability("v", ("a",)) == pytest.approx(0.6)
        assert len(updated.lexicon) == 2

    def test_bad_probability_rejected(self):
        model = uniform_model([("v", ("a",))])
        for p in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ConfigurationError):
                add_word(model, "u", ("b",), p)

    def test_new_word_wins_on_exact_copy(self):
        t = Transducer.from_probabilities(
            A2,
            A2,
            {
                EditOp("a", "a"): 0.30,
                EditOp("b", "b"): 0.30,
                EditOp("a", "b"): 0.05,
                EditOp("b", "a"): 0.05,
                EditOp("a", None): 0.05,
                EditOp("b", None): 0.05,
                EditOp(None, "a"): 0.05,
                EditOp(None, "b"): 0.05,
            },
            termination=0.10,
        )
        lexicon = Lexicon.uniform_product(A2, [("v", ("a", "a")), ("w", ("b", "b"))])
        model = ClassifierModel(t, lexicon)
        new_form = ("a", "b", "a")
        updated = add_word(model, "u", new_form, 0.3)
        decision = classify(new_form, updated)
        assert "u" in decision.words


class TestScoring:
    def test_all_correct_singletons(self):
        decisions = [Decision((("w", ("a",)),), 1.0)] * 3
        assert word_error_rate(decisions, ["w", "w", "w"]) == 0.0

    def test_half_credit_for_two_entry_decisions(self):
        decision = Decision((("v", ("a",)), ("w", ("a",))), 0.5)
        assert word_error_rate([decision] * 4, ["v"] * 4) == pytest.approx(0.5)

    def test_all_wrong(self):
        decisions = [Decision((("w", ("a",)),), 1.0)] * 2
        assert word_error_rate(decisions, ["v", "u"]) == 1.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(InputError):
            word_error_rate([], [])

    def test_out_of_vocabulary_labels_score_as_errors(self):
        model = uniform_model([("w", ("a",))])
        error = evaluate_classifier(model, [("unknown", ("a",)), ("w", ("a",))])
        assert error == pytest.approx(0.5)


class TestFlatPairing:
    def test_one_pair_per_prototype(self):
        lexicon = Lexicon.uniform_product(
            A2, [("v", ("a",)), ("w", ("a", "b")), ("w", ("b",)), ("w", ("b", "a"))]
        )
        samples = [("v", ("a", "a")), ("w", ("b", "b"))]
        pairs = flat_training_pairs(samples, lexicon)
        assert pairs.count((("a",), ("a", "a"))) == 1
        assert len([p for p in pairs if p[1] == ("b", "b")]) == 3
        assert len(pairs) == 4


class TestNearestNeighbor:
    def test_exact_match_is_among_minimizers(self):
        lexicon = Lexicon.uniform_product(A2, [("v", ("a", "b")), ("w", ("b", "b"))])
        decision = nearest_neighbor_classify(
            ("a", "b"), lexicon, levenshtein_rule(A2, A2)
        )
        assert decision.score == 0.0
        assert ("v", ("a", "b")) in decision.entries

    def test_homophone_forms_tie(self):
        lexicon = Lexicon.uniform_product(A2, [("v", ("a",)), ("w", ("a",))])
        decision = nearest_neighbor_classify(("a",), lexicon, levenshtein_rule(A2, A2))
        assert decision.entries == (("v", ("a",)), ("w", ("a",)))

    def test_agrees_with_posterior_rule_in_reduced_setting(self, rng):
        # one prototype per word, uniform priors: both rules rank by the
        # pair probability of (prototype, observation)
        entries = [("v", ("a", "a")), ("w", ("b",)), ("u", ("a", "b", "b"))]
        t = Transducer.random(A2, A2, rng)
        model = ClassifierModel(t, Lexicon.uniform_product(A2, entries))
        for y in random_strings(rng, A2, 4, 25):
            posterior_rule = classify(y, model)
            distance_rule = nearest_neighbor_classify(
                y, model.lexicon, stochastic_rule(t)
            )
            if not posterior_rule.is_no_decision:
                assert posterior_rule.words == distance_rule.words

    def test_unreachable_everything_is_no_decision(self):
        t = Transducer.from_probabilities(
            A2, A2, {EditOp("a", "a"): 0.9}, termination=0.1
        )
        lexicon = Lexicon.uniform_product(A2, [("w", ("a",))])
        decision = nearest_neighbor_classify(("b",), lexicon, stochastic_rule(t))
        assert decision.is_no_decision


class TestMixedClassifiers:
    def test_average_of_identical_models_changes_nothing(self, rng):
        entries = [("v", ("a",)), ("w", ("b", "b"))]
        model = ClassifierModel(
            Transducer.random(A2, A2, rng), Lexicon.uniform_product(A2, entries)
        )
        for y in random_strings(rng, A2, 3, 10):
            single = classify(y, model)
            mixed = classify_mixed(y, [model, model])
            assert single.words == mixed.words

    def test_joint_is_arithmetic_mean(self, rng):
        entries = [("v", ("a",)), ("w", ("b",))]
        m1 = ClassifierModel(Transducer.random(A2, A2, rng), Lexicon.uniform_product(A2, entries))
        m2 = ClassifierModel(Transducer.random(A2, A2, rng), Lexicon.uniform_product(A2, entries))
        from stredit import mixed_class_log_joints

        y = ("a", "b")
        mixed = mixed_class_log_joints(y, [m1, m2])
        for word in ("v", "w"):
            expected = 0.5 * math.exp(class_log_joints(y, m1)[word]) + 0.5 * math.exp(
                class_log_joints(y, m2)[word]
            )
            assert math.exp(mixed[word]) == pytest.approx(expected, rel=1e-10)

    def test_word_sets_must_match(self, rng):
        m1 = ClassifierModel(
            Transducer.random(A2, A2, rng),
            Lexicon.uniform_product(A2, [("v", ("a",))]),
        )
        m2 = ClassifierModel(
            Transducer.random(A2, A2, rng),
            Lexicon.uniform_product(A2, [("w", ("a",))]),
        )
        with pytest.raises(ConfigurationError):
            classify_mixed(("a",), [m1, m2])


class TestAlphabetConsistency:
    def test_mismatched_alphabets_rejected(self):
        other = Alphabet(["x", "y"])
        t = Transducer.uniform(other, A2)
        lexicon = Lexicon.uniform_product(A2, [("w", ("a",))])
        with pytest.raises(ConfigurationError):
            ClassifierModel(t, lexicon)
