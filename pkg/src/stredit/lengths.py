"""Edit models conditioned on string lengths.

The factored parameterization has no end marker.  Each edit probability
splits into a transition choice (delete, insert, or substitute) and an
observation choice of the symbols involved.  Conditioning on the output
lengths (T, V) then gives a proper distribution over exactly the pairs
in A^T x B^V: while both strings are incomplete, operations carry their
transition factor; once one string is complete, the remaining moves are
forced and draw from the matching observation distribution alone.

An explicit joint length table extends the conditional model to a full
distribution on string pairs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .alphabet import Alphabet
from .errors import ConfigurationError, InputError, TrainingError
from .training import TrainOptions, _relative_change
from .transducer import LN2, NEG_INF, Transducer, _as_rng, _logaddexp

_NORMALIZATION_TOL = 1e-9


def _check_distribution(values: np.ndarray, name: str) -> None:
    if np.isnan(values).any() or (values < 0).any():
        raise ConfigurationError(f"{name} probabilities must be nonnegative")
    total = float(values.sum())
    if abs(total - 1.0) > _NORMALIZATION_TOL:
        raise ConfigurationError(f"{name} probabilities sum to {total!r}, not one")


class FactoredTransducer:
    """A memoryless edit model split into transition and observation parts.

    ``omega`` = (delete, insert, substitute) transition probabilities;
    the observation tables give the deleted symbol, inserted symbol, and
    substituted symbol pair, each a distribution of its own.  Immutable
    after construction.
    """

    __slots__ = (
        "source_alphabet",
        "target_alphabet",
        "omega",
        "deletion",
        "insertion",
        "substitution",
        "log_omega",
        "log_deletion",
        "log_insertion",
        "log_substitution",
        "_log_omega",
        "_log_del",
        "_log_ins",
        "_log_sub",
        "_free_cumulative",
    )

    def __init__(
        self,
        source_alphabet: Alphabet,
        target_alphabet: Alphabet,
        omega: Sequence[float],
        deletion: np.ndarray,
        insertion: np.ndarray,
        substitution: np.ndarray,
    ):
        omega = np.asarray(list(omega), dtype=float)
        deletion = np.asarray(deletion, dtype=float)
        insertion = np.asarray(insertion, dtype=float)
        substitution = np.asarray(substitution, dtype=float)
        if omega.shape != (3,):
            raise ConfigurationError("omega must hold (delete, insert, substitute)")
        if deletion.shape != (len(source_alphabet),):
            raise ConfigurationError("deletion table has the wrong shape")
        if insertion.shape != (len(target_alphabet),):
            raise ConfigurationError("insertion table has the wrong shape")
        if substitution.shape != (len(source_alphabet), len(target_alphabet)):
            raise ConfigurationError("substitution table has the wrong shape")
        _check_distribution(omega, "transition")
        _check_distribution(deletion, "deletion")
        _check_distribution(insertion, "insertion")
        _check_distribution(substitution.ravel(), "substitution")
        with np.errstate(divide="ignore"):
            self._finish_init(
                source_alphabet,
                target_alphabet,
                np.log(omega),
                np.log(deletion),
                np.log(insertion),
                np.log(substitution),
            )

    @classmethod
    def from_log_parameters(
        cls,
        source_alphabet: Alphabet,
        target_alphabet: Alphabet,
        log_omega: np.ndarray,
        log_deletion: np.ndarray,
        log_insertion: np.ndarray,
        log_substitution: np.ndarray,
    ) -> "FactoredTransducer":
        """Build from natural-log parameters without re-deriving them.

        The log values become canonical, which keeps save/load cycles
        exact.  The implied linear distributions are still validated.
        """
        model = cls.__new__(cls)
        model._finish_init(
            source_alphabet,
            target_alphabet,
            np.asarray(log_omega, dtype=float),
            np.asarray(log_deletion, dtype=float),
            np.asarray(log_insertion, dtype=float),
            np.asarray(log_substitution, dtype=float),
        )
        _check_distribution(model.omega, "transition")
        _check_distribution(model.deletion, "deletion")
        _check_distribution(model.insertion, "insertion")
        _check_distribution(model.substitution.ravel(), "substitution")
        return model

    def _finish_init(self, source_alphabet, target_alphabet, log_omega, log_deletion,
                     log_insertion, log_substitution):
        # linear views are derived from the canonical log tables
        omega = np.exp(log_omega)
        deletion = np.exp(log_deletion)
        insertion = np.exp(log_insertion)
        substitution = np.exp(log_substitution)
        for table in (omega, deletion, insertion, substitution,
                      log_omega, log_deletion, log_insertion, log_substitution):
            table.setflags(write=False)
        self.source_alphabet = source_alphabet
        self.target_alphabet = target_alphabet
        self.omega = omega
        self.deletion = deletion
        self.insertion = insertion
        self.substitution = substitution
        self.log_omega = log_omega
        self.log_deletion = log_deletion
        self.log_insertion = log_insertion
        self.log_substitution = log_substitution
        self._log_omega = log_omega.tolist()
        self._log_del = log_deletion.tolist()
        self._log_ins = log_insertion.tolist()
        self._log_sub = log_substitution.tolist()
        self._free_cumulative = None

    @classmethod
    def uniform(cls, source_alphabet: Alphabet, target_alphabet: Alphabet) -> "FactoredTransducer":
        na, nb = len(source_alphabet), len(target_alphabet)
        return cls(
            source_alphabet,
            target_alphabet,
            (1 / 3, 1 / 3, 1 / 3),
            np.full(na, 1 / na),
            np.full(nb, 1 / nb),
            np.full((na, nb), 1 / (na * nb)),
        )

    @classmethod
    def random(
        cls, source_alphabet: Alphabet, target_alphabet: Alphabet, rng=None
    ) -> "FactoredTransducer":
        """A strictly positive random model (flat Dirichlet draws)."""
        rng = _as_rng(rng)
        na, nb = len(source_alphabet), len(target_alphabet)

        def draw(n):
            while True:
                p = rng.dirichlet(np.ones(n))
                if (p > 0.0).all():
                    return p

        return cls(
            source_alphabet,
            target_alphabet,
            draw(3),
            draw(na),
            draw(nb),
            draw(na * nb).reshape(na, nb),
        )

    def __repr__(self) -> str:
        d, i, s = self.omega
        return (
            f"FactoredTransducer(|A|={len(self.source_alphabet)}, "
            f"|B|={len(self.target_alphabet)}, omega=({d:.3g}, {i:.3g}, {s:.3g}))"
        )


def factor(transducer: Transducer) -> FactoredTransducer:
    """Split a flat edit model into transition and observation factors.

    The end-marker mass is dropped and the edit probabilities are
    renormalized first.  Fails if any operation kind carries zero total
    mass, since its observation distribution would be undefined.
    """
    sub = np.exp(transducer.log_substitution)
    dele = np.exp(transducer.log_deletion)
    ins = np.exp(transducer.log_insertion)
    mass_d = float(dele.sum())
    mass_i = float(ins.sum())
    mass_s = float(sub.sum())
    if mass_d <= 0.0 or mass_i <= 0.0 or mass_s <= 0.0:
        raise ConfigurationError(
            "cannot factor a model with zero deletion, insertion, or substitution mass"
        )
    edit_mass = mass_d + mass_i + mass_s
    return FactoredTransducer(
        transducer.source_alphabet,
        transducer.target_alphabet,
        (mass_d / edit_mass, mass_i / edit_mass, mass_s / edit_mass),
        dele / mass_d,
        ins / mass_i,
        sub / mass_s,
    )


def unfactor(factored: FactoredTransducer) -> Transducer:
    """Multiply the factors back into a flat edit table.

    The result sums to one over the edit operations and carries no
    end-marker mass, so it is a valid distribution but not a string-pair
    model on its own.
    """
    omega_d, omega_i, omega_s = factored.omega
    with np.errstate(divide="ignore"):
        return Transducer(
            factored.source_alphabet,
            factored.target_alphabet,
            np.log(factored.substitution * omega_s),
            np.log(factored.deletion * omega_d),
            np.log(factored.insertion * omega_i),
            NEG_INF,
        )


def generate_strings(
    T: int, V: int, factored: FactoredTransducer, rng=None
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Draw one string pair with exactly the requested lengths.

    While both strings are incomplete, weighted edit operations are
    drawn from the full table; once one string is complete, the other is
    finished with draws from the matching observation distribution
    alone.
    """
    if T < 0 or V < 0:
        raise InputError("string lengths must be nonnegative")
    rng = _as_rng(rng)
    if factored._free_cumulative is None:
        omega_d, omega_i, omega_s = factored.omega
        probs = np.concatenate(
            [
                factored.deletion * omega_d,
                factored.insertion * omega_i,
                (factored.substitution * omega_s).ravel(),
            ]
        )
        cumulative = np.cumsum(probs)
        cumulative /= cumulative[-1]
        factored._free_cumulative = cumulative
    cumulative = factored._free_cumulative
    del_cum = np.cumsum(factored.deletion)
    ins_cum = np.cumsum(factored.insertion)
    na, nb = len(factored.source_alphabet), len(factored.target_alphabet)
    x: list[str] = []
    y: list[str] = []
    while len(x) < T and len(y) < V:
        choice = int(np.searchsorted(cumulative, rng.random(), side="right"))
        if choice < na:
            x.append(factored.source_alphabet[choice])
        elif choice < na + nb:
            y.append(factored.target_alphabet[choice - na])
        else:
            choice -= na + nb
            x.append(factored.source_alphabet[choice // nb])
            y.append(factored.target_alphabet[choice % nb])
    while len(x) < T:
        choice = int(np.searchsorted(del_cum, rng.random() * del_cum[-1], side="right"))
        x.append(factored.source_alphabet[choice])
    while len(y) < V:
        choice = int(np.searchsorted(ins_cum, rng.random() * ins_cum[-1], side="right"))
        y.append(factored.target_alphabet[choice])
    return tuple(x), tuple(y)


# ----------------------------------------------------------------------
# lattice kernels
#
# Cell (t, v) tracks edit sequences that have generated the prefixes of
# the two strings.  A move is forced exactly when its source cell sits
# on the completed edge: deletions into column V and insertions into row
# T drop their transition factor.


def _forward_rows_factored(xs, ys, f: FactoredTransducer):
    T, V = len(xs), len(ys)
    w_d, w_i, w_s = f._log_omega
    dele, ins, sub = f._log_del, f._log_ins, f._log_sub
    rows = [[NEG_INF] * (V + 1) for _ in range(T + 1)]
    rows[0][0] = 0.0
    row = rows[0]
    for v in range(1, V + 1):
        step = ins[ys[v - 1]] if T == 0 else w_i + ins[ys[v - 1]]
        row[v] = row[v - 1] + step
    for t in range(1, T + 1):
        prev = rows[t - 1]
        cur = rows[t]
        xi = xs[t - 1]
        d_forced = dele[xi]
        d_free = w_d + d_forced
        srow = sub[xi]
        cur[0] = prev[0] + (d_forced if V == 0 else d_free)
        for v in range(1, V + 1):
            yv = ys[v - 1]
            total = (w_s + srow[yv]) + prev[v - 1]
            total = _logaddexp(total, (d_forced if v == V else d_free) + prev[v])
            i_step = ins[yv] if t == T else w_i + ins[yv]
            total = _logaddexp(total, i_step + cur[v - 1])
            cur[v] = total
    return rows


def _backward_rows_factored(xs, ys, f: FactoredTransducer):
    T, V = len(xs), len(ys)
    w_d, w_i, w_s = f._log_omega
    dele, ins, sub = f._log_del, f._log_ins, f._log_sub
    rows = [[NEG_INF] * (V + 1) for _ in range(T + 1)]
    rows[T][V] = 0.0
    last = rows[T]
    for v in range(V - 1, -1, -1):
        last[v] = ins[ys[v]] + last[v + 1]
    for t in range(T - 1, -1, -1):
        cur = rows[t]
        nxt = rows[t + 1]
        xi = xs[t]
        d_forced = dele[xi]
        d_free = w_d + d_forced
        srow = sub[xi]
        cur[V] = d_forced + nxt[V]
        for v in range(V - 1, -1, -1):
            yv = ys[v]
            total = (w_s + srow[yv]) + nxt[v + 1]
            total = _logaddexp(total, d_free + nxt[v])
            total = _logaddexp(total, (w_i + ins[yv]) + cur[v + 1])
            cur[v] = total
    return rows


def _viterbi_rows_factored(xs, ys, f: FactoredTransducer):
    T, V = len(xs), len(ys)
    w_d, w_i, w_s = f._log_omega
    dele, ins, sub = f._log_del, f._log_ins, f._log_sub
    rows = [[NEG_INF] * (V + 1) for _ in range(T + 1)]
    rows[0][0] = 0.0
    row = rows[0]
    for v in range(1, V + 1):
        step = ins[ys[v - 1]] if T == 0 else w_i + ins[ys[v - 1]]
        row[v] = row[v - 1] + step
    for t in range(1, T + 1):
        prev = rows[t - 1]
        cur = rows[t]
        xi = xs[t - 1]
        d_forced = dele[xi]
        d_free = w_d + d_forced
        srow = sub[xi]
        cur[0] = prev[0] + (d_forced if V == 0 else d_free)
        for v in range(1, V + 1):
            yv = ys[v - 1]
            best = (w_s + srow[yv]) + prev[v - 1]
            cand = (d_forced if v == V else d_free) + prev[v]
            if cand > best:
                best = cand
            cand = (ins[yv] if t == T else w_i + ins[yv]) + cur[v - 1]
            if cand > best:
                best = cand
            cur[v] = best
    return rows


def _encode_pair(x, y, factored):
    return factored.source_alphabet.encode(x), factored.target_alphabet.encode(y)


def forward_evaluate_strings(
    x: Sequence[str], y: Sequence[str], factored: FactoredTransducer
) -> np.ndarray:
    """Length-conditioned prefix log probabilities as a (T+1, V+1) array.

    Cell (t, v) is the natural-log probability of generating both
    prefixes and standing at that lattice position, given the lengths.
    """
    xs, ys = _encode_pair(x, y, factored)
    return np.array(_forward_rows_factored(xs, ys, factored))


def backward_evaluate_strings(
    x: Sequence[str], y: Sequence[str], factored: FactoredTransducer
) -> np.ndarray:
    """Length-conditioned suffix log probabilities as a (T+1, V+1) array.

    Cell (0, 0) equals the final forward cell; cell (T, V) is zero
    (probability one), as no end marker exists in this parameterization.
    """
    xs, ys = _encode_pair(x, y, factored)
    return np.array(_backward_rows_factored(xs, ys, factored))


def log_conditional_probability(
    x: Sequence[str], y: Sequence[str], factored: FactoredTransducer
) -> float:
    """Natural-log probability of the pair given its lengths."""
    xs, ys = _encode_pair(x, y, factored)
    rows = _forward_rows_factored(xs, ys, factored)
    return rows[len(xs)][len(ys)]


def conditional_probability(
    x: Sequence[str], y: Sequence[str], factored: FactoredTransducer
) -> float:
    """Probability of the pair among all pairs with the same lengths.

    Sums to one over A^T x B^V for every (T, V).
    """
    return math.exp(log_conditional_probability(x, y, factored))


def conditional_distances(
    x: Sequence[str], y: Sequence[str], factored: FactoredTransducer
) -> tuple[float, float]:
    """(best-alignment bits, aggregate bits), conditioned on the lengths.

    Finite only for pairs whose lengths match the conditioning, which
    here is always taken from the pair itself.
    """
    xs, ys = _encode_pair(x, y, factored)
    viterbi = _viterbi_rows_factored(xs, ys, factored)[len(xs)][len(ys)]
    aggregate = _forward_rows_factored(xs, ys, factored)[len(xs)][len(ys)]
    return -viterbi / LN2, -aggregate / LN2


class LengthPrior:
    """An explicit joint probability table on string-length pairs."""

    __slots__ = ("_probs",)

    def __init__(self, probabilities: Mapping[tuple[int, int], float]):
        probs = {}
        for (t, v), p in probabilities.items():
            if t < 0 or v < 0:
                raise ConfigurationError("lengths must be nonnegative")
            if p < 0:
                raise ConfigurationError("length probabilities must be nonnegative")
            if p > 0:
                probs[(int(t), int(v))] = float(p)
        if not probs:
            raise ConfigurationError("a length prior needs positive mass somewhere")
        total = math.fsum(probs.values())
        if abs(total - 1.0) > _NORMALIZATION_TOL:
            raise ConfigurationError(f"length probabilities sum to {total!r}, not one")
        self._probs = probs

    @classmethod
    def from_corpus(cls, pairs: Iterable[tuple[Sequence[str], Sequence[str]]]) -> "LengthPrior":
        """Relative frequencies of the length pairs seen in a corpus."""
        counts: dict[tuple[int, int], float] = {}
        n = 0
        for x, y in pairs:
            key = (len(tuple(x)), len(tuple(y)))
            counts[key] = counts.get(key, 0.0) + 1.0
            n += 1
        if n == 0:
            raise TrainingError("cannot estimate a length prior from an empty corpus")
        return cls({key: c / n for key, c in counts.items()})

    def probability(self, lengths: tuple[int, int]) -> float:
        return self._probs.get(lengths, 0.0)

    def support(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self._probs))

    def __repr__(self) -> str:
        return f"LengthPrior({len(self._probs)} length pairs)"


def joint_with_length_prior(
    x: Sequence[str],
    y: Sequence[str],
    factored: FactoredTransducer,
    prior: LengthPrior,
) -> float:
    """Full pair probability: length-conditioned probability times length prior."""
    p_lengths = prior.probability((len(tuple(x)), len(tuple(y))))
    if p_lengths <= 0.0:
        return 0.0
    return conditional_probability(x, y, factored) * p_lengths


# ----------------------------------------------------------------------
# estimation


class FactoredAccumulator:
    """Expected counts for the transition and observation parameters.

    Transition counts only ever receive mass from unforced moves, where
    a transition choice was actually made; observation counts receive
    mass from every move, forced completions included.
    """

    __slots__ = ("source_alphabet", "target_alphabet", "chi", "gamma_deletion",
                 "gamma_insertion", "gamma_substitution", "skipped")

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
        self.chi = np.full(3, smoothing)  # (delete, insert, substitute)
        self.gamma_deletion = np.full(len(source_alphabet), smoothing)
        self.gamma_insertion = np.full(len(target_alphabet), smoothing)
        self.gamma_substitution = np.full(
            (len(source_alphabet), len(target_alphabet)), smoothing
        )
        self.skipped = 0

    def merge(self, other: "FactoredAccumulator") -> "FactoredAccumulator":
        if (
            other.source_alphabet != self.source_alphabet
            or other.target_alphabet != self.target_alphabet
        ):
            raise ConfigurationError("cannot merge accumulators over different alphabets")
        self.chi += other.chi
        self.gamma_deletion += other.gamma_deletion
        self.gamma_insertion += other.gamma_insertion
        self.gamma_substitution += other.gamma_substitution
        self.skipped += other.skipped
        return self


def expectation_step_strings(
    x: Sequence[str],
    y: Sequence[str],
    factored: FactoredTransducer,
    accumulator: FactoredAccumulator,
    weight: float = 1.0,
) -> float:
    """Accumulate length-conditioned posterior counts for one pair.

    Derived from the per-move case analysis: every move contributes to
    its observation count, while only unforced moves contribute to the
    transition counts.  Returns the natural-log conditional probability
    of the pair, or -inf when it is unreachable (tallied, nothing
    added).
    """
    if weight < 0:
        raise ConfigurationError("expectation weight must be nonnegative")
    xs, ys = _encode_pair(x, y, factored)
    T, V = len(xs), len(ys)
    fwd = _forward_rows_factored(xs, ys, factored)
    total = fwd[T][V]
    if total == NEG_INF:
        accumulator.skipped += 1
        return NEG_INF
    if weight == 0.0:
        return total
    bwd = _backward_rows_factored(xs, ys, factored)
    w_d, w_i, w_s = factored._log_omega
    dele, ins, sub = factored._log_del, factored._log_ins, factored._log_sub
    exp = math.exp
    chi = accumulator.chi
    g_del = accumulator.gamma_deletion
    g_ins = accumulator.gamma_insertion
    g_sub = accumulator.gamma_substitution
    for t in range(T + 1):
        frow = fwd[t]
        brow = bwd[t]
        fprev = fwd[t - 1] if t > 0 else None
        xi = xs[t - 1] if t > 0 else -1
        for v in range(V + 1):
            b = brow[v]
            if b == NEG_INF:
                continue
            if t > 0:
                # deletion into (t, v); forced when the target is complete
                if v == V:
                    m = weight * exp(fprev[v] + dele[xi] + b - total)
                    g_del[xi] += m
                else:
                    m = weight * exp(fprev[v] + w_d + dele[xi] + b - total)
                    g_del[xi] += m
                    chi[0] += m
                if v > 0:
                    yv = ys[v - 1]
                    m = weight * exp(fprev[v - 1] + w_s + sub[xi][yv] + b - total)
                    g_sub[xi][yv] += m
                    chi[2] += m
            if v > 0:
                # insertion into (t, v); forced when the source is complete
                yv = ys[v - 1]
                if t == T:
                    m = weight * exp(frow[v - 1] + ins[yv] + b - total)
                    g_ins[yv] += m
                else:
                    m = weight * exp(frow[v - 1] + w_i + ins[yv] + b - total)
                    g_ins[yv] += m
                    chi[1] += m
    return total


def maximization_step_strings(
    factored: FactoredTransducer, accumulator: FactoredAccumulator
) -> FactoredTransducer:
    """Renormalize each parameter set independently into a new model.

    A parameter set whose counts are all zero is left unchanged, since
    nothing was observed about it; if every set is empty, training
    cannot proceed.
    """
    chi_total = float(accumulator.chi.sum())
    del_total = float(accumulator.gamma_deletion.sum())
    ins_total = float(accumulator.gamma_insertion.sum())
    sub_total = float(accumulator.gamma_substitution.sum())
    if chi_total <= 0 and del_total <= 0 and ins_total <= 0 and sub_total <= 0:
        raise TrainingError("no expectations accumulated; cannot renormalize")
    omega = (
        tuple(accumulator.chi / chi_total) if chi_total > 0 else tuple(factored.omega)
    )
    deletion = (
        accumulator.gamma_deletion / del_total if del_total > 0 else factored.deletion
    )
    insertion = (
        accumulator.gamma_insertion / ins_total if ins_total > 0 else factored.insertion
    )
    substitution = (
        accumulator.gamma_substitution / sub_total if sub_total > 0 else factored.substitution
    )
    return FactoredTransducer(
        factored.source_alphabet,
        factored.target_alphabet,
        omega,
        deletion,
        insertion,
        substitution,
    )


@dataclass
class FactoredTrainResult:
    """A trained length-conditioned model plus its audit trail.

    ``log_likelihood`` holds the total log2 conditional probability of
    the corpus before each iteration's update.
    """

    transducer: FactoredTransducer
    log_likelihood: list[float] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)


def train_strings(
    factored: FactoredTransducer,
    pairs: Iterable[tuple[Sequence[str], Sequence[str]]],
    options: TrainOptions | None = None,
) -> FactoredTrainResult:
    """Fit the length-conditioned model to a corpus of string pairs.

    Mirrors the flat trainer's outer loop; each pair is conditioned on
    its own lengths.  Only full expectations are supported.
    """
    options = options or TrainOptions()
    if options.expectation != "full":
        raise ConfigurationError("length-conditioned training uses full expectations only")
    if options.tying is not None:
        raise ConfigurationError("tying is not defined for the factored parameterization")
    pairs = [(tuple(x), tuple(y)) for x, y in pairs]
    if not pairs:
        raise TrainingError("training corpus is empty")
    result = FactoredTrainResult(factored)
    model = factored
    for _ in range(options.max_iterations):
        accumulator, ll_bits, processed = _corpus_expectation_strings(pairs, model, options)
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
        model = maximization_step_strings(model, accumulator)
        result.transducer = model
    return result


def _corpus_expectation_strings(pairs, model, options):
    def sweep(chunk):
        acc = FactoredAccumulator(model.source_alphabet, model.target_alphabet, 0.0)
        ll = 0.0
        processed = 0
        for x, y in chunk:
            logp = expectation_step_strings(x, y, model, acc, 1.0)
            if logp != NEG_INF:
                ll += logp
                processed += 1
        return acc, ll, processed

    accumulator = FactoredAccumulator(
        model.source_alphabet, model.target_alphabet, options.smoothing
    )
    if options.n_jobs == 1 or len(pairs) < 2 * options.n_jobs:
        results = [sweep(pairs)]
    else:
        chunks = [pairs[i :: options.n_jobs] for i in range(options.n_jobs)]
        with ThreadPoolExecutor(max_workers=options.n_jobs) as pool:
            results = list(pool.map(sweep, chunks))
    ll = 0.0
    processed = 0
    for acc, chunk_ll, chunk_processed in results:
        accumulator.merge(acc)
        ll += chunk_ll
        processed += chunk_processed
    return accumulator, ll / LN2, processed
