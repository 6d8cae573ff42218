"""Memoryless stochastic edit models and their distances.

A model holds one probability distribution over the edit operations
(substitutions, deletions, insertions) plus an end marker, and generates
a terminated operation sequence by independent draws.  The probability
of a string pair is the total probability of every operation sequence
whose yield is that pair; lattice recursions compute it in O(T*V).

All arithmetic is carried out on natural-log probabilities to stay
stable on long strings; distances are reported in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .alphabet import Alignment, Alphabet, CostFunction, EditOp, TERMINATE
from .errors import ConfigurationError, InputError

NEG_INF = float("-inf")
LN2 = math.log(2.0)

_NORMALIZATION_TOL = 1e-9


def _logaddexp(a: float, b: float) -> float:
    # scalar log(exp(a) + exp(b)); much faster than np.logaddexp here
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of checking an edit model's probability table.

    ``is_distribution`` holds when all entries lie in [0, 1] and the
    table sums to one; ``is_string_pair_model`` additionally requires
    positive end-marker probability, without which the model assigns
    zero total mass to finite string pairs.
    """

    is_distribution: bool
    has_termination_mass: bool
    total: float
    problems: tuple[str, ...]

    @property
    def is_string_pair_model(self) -> bool:
        return self.is_distribution and self.has_termination_mass


class Transducer:
    """A memoryless stochastic edit model over a fixed alphabet pair.

    Parameters are stored as natural-log probabilities and the instance
    is immutable after construction; evaluation functions are pure, so a
    shared model may be used concurrently.  Updates happen by building a
    new instance (see the training module).
    """

    __slots__ = (
        "source_alphabet",
        "target_alphabet",
        "log_substitution",
        "log_deletion",
        "log_insertion",
        "log_termination",
        "_sub",
        "_del",
        "_ins",
        "_cumulative",
    )

    def __init__(
        self,
        source_alphabet: Alphabet,
        target_alphabet: Alphabet,
        log_substitution: np.ndarray,
        log_deletion: np.ndarray,
        log_insertion: np.ndarray,
        log_termination: float,
    ):
        log_substitution = np.asarray(log_substitution, dtype=float)
        log_deletion = np.asarray(log_deletion, dtype=float)
        log_insertion = np.asarray(log_insertion, dtype=float)
        if log_substitution.shape != (len(source_alphabet), len(target_alphabet)):
            raise ConfigurationError("substitution table has the wrong shape")
        if log_deletion.shape != (len(source_alphabet),):
            raise ConfigurationError("deletion table has the wrong shape")
        if log_insertion.shape != (len(target_alphabet),):
            raise ConfigurationError("insertion table has the wrong shape")
        for table in (log_substitution, log_deletion, log_insertion):
            if np.isnan(table).any():
                raise ConfigurationError("log probabilities may not be NaN")
            table.setflags(write=False)
        if math.isnan(log_termination):
            raise ConfigurationError("log probabilities may not be NaN")
        self.source_alphabet = source_alphabet
        self.target_alphabet = target_alphabet
        self.log_substitution = log_substitution
        self.log_deletion = log_deletion
        self.log_insertion = log_insertion
        self.log_termination = float(log_termination)
        # plain-list mirrors for the scalar lattice kernels
        self._sub = log_substitution.tolist()
        self._del = log_deletion.tolist()
        self._ins = log_insertion.tolist()
        self._cumulative = None

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def uniform(cls, source_alphabet: Alphabet, target_alphabet: Alphabet) -> "Transducer":
        """Equal probability on every edit operation and the end marker."""
        na, nb = len(source_alphabet), len(target_alphabet)
        n_events = na * nb + na + nb + 1
        logp = -math.log(n_events)
        return cls(
            source_alphabet,
            target_alphabet,
            np.full((na, nb), logp),
            np.full(na, logp),
            np.full(nb, logp),
            logp,
        )

    @classmethod
    def random(
        cls, source_alphabet: Alphabet, target_alphabet: Alphabet, rng=None
    ) -> "Transducer":
        """A strictly positive random model (flat Dirichlet draw)."""
        rng = _as_rng(rng)
        na, nb = len(source_alphabet), len(target_alphabet)
        n_events = na * nb + na + nb + 1
        while True:
            probs = rng.dirichlet(np.ones(n_events))
            if (probs > 0.0).all():
                break
        logs = np.log(probs)
        sub = logs[: na * nb].reshape(na, nb)
        dele = logs[na * nb : na * nb + na]
        ins = logs[na * nb + na : na * nb + na + nb]
        return cls(source_alphabet, target_alphabet, sub, dele, ins, float(logs[-1]))

    @classmethod
    def from_probabilities(
        cls,
        source_alphabet: Alphabet,
        target_alphabet: Alphabet,
        probabilities: Mapping[EditOp, float],
        termination: float | None = None,
    ) -> "Transducer":
        """Build a model from a sparse operation-to-probability mapping.

        Operations absent from the mapping get probability zero.  The
        end-marker probability may be given either under
        :data:`TERMINATE` or through ``termination``.  Probabilities
        must be nonnegative; the sum is reported by :meth:`validate`
        rather than enforced here, so deliberately unnormalized tables
        can be constructed for inspection.
        """
        na, nb = len(source_alphabet), len(target_alphabet)
        sub = np.zeros((na, nb))
        dele = np.zeros(na)
        ins = np.zeros(nb)
        end = 0.0
        for op, value in probabilities.items():
            if value < 0:
                raise ConfigurationError(f"negative probability for {op}")
            if op.is_terminator:
                end = value
            elif op.is_substitution:
                sub[source_alphabet.index(op.source), target_alphabet.index(op.target)] = value
            elif op.is_deletion:
                dele[source_alphabet.index(op.source)] = value
            else:
                ins[target_alphabet.index(op.target)] = value
        if termination is not None:
            if TERMINATE in probabilities:
                raise ConfigurationError("end-marker probability given twice")
            if termination < 0:
                raise ConfigurationError("negative end-marker probability")
            end = termination
        with np.errstate(divide="ignore"):
            return cls(
                source_alphabet,
                target_alphabet,
                np.log(sub),
                np.log(dele),
                np.log(ins),
                math.log(end) if end > 0 else NEG_INF,
            )

    # ------------------------------------------------------------------
    # accessors

    def log_probability(self, op: EditOp) -> float:
        """Natural-log probability of one operation (or the end marker)."""
        if op.is_terminator:
            return self.log_termination
        if op.is_substitution:
            return float(
                self.log_substitution[
                    self.source_alphabet.index(op.source), self.target_alphabet.index(op.target)
                ]
            )
        if op.is_deletion:
            return float(self.log_deletion[self.source_alphabet.index(op.source)])
        return float(self.log_insertion[self.target_alphabet.index(op.target)])

    def probability(self, op: EditOp) -> float:
        return math.exp(self.log_probability(op))

    def edit_ops(self) -> Iterator[EditOp]:
        """All edit operations over the alphabet pair, end marker excluded."""
        for a in self.source_alphabet:
            for b in self.target_alphabet:
                yield EditOp(a, b)
        for a in self.source_alphabet:
            yield EditOp(a, None)
        for b in self.target_alphabet:
            yield EditOp(None, b)

    @property
    def n_parameters(self) -> int:
        na, nb = len(self.source_alphabet), len(self.target_alphabet)
        return na * nb + na + nb + 1

    def validate(self) -> ValidityReport:
        """Check the probability table; reports rather than raises."""
        problems = []
        total = (
            float(np.exp(self.log_substitution).sum())
            + float(np.exp(self.log_deletion).sum())
            + float(np.exp(self.log_insertion).sum())
            + math.exp(self.log_termination)
        )
        highest = max(
            float(self.log_substitution.max(initial=NEG_INF)),
            float(self.log_deletion.max(initial=NEG_INF)),
            float(self.log_insertion.max(initial=NEG_INF)),
            self.log_termination,
        )
        if highest > 1e-15:
            problems.append("an entry exceeds one")
        if abs(total - 1.0) > _NORMALIZATION_TOL:
            problems.append(f"probabilities sum to {total!r}, not one")
        has_end = self.log_termination > NEG_INF
        if not has_end:
            problems.append("end-marker probability is zero: string pairs carry no mass")
        return ValidityReport(
            is_distribution=abs(total - 1.0) <= _NORMALIZATION_TOL and highest <= 1e-15,
            has_termination_mass=has_end,
            total=total,
            problems=tuple(problems),
        )

    def __repr__(self) -> str:
        return (
            f"Transducer(|A|={len(self.source_alphabet)}, |B|={len(self.target_alphabet)}, "
            f"end={math.exp(self.log_termination):.4g})"
        )

    # ------------------------------------------------------------------
    # sampling

    def _sampling_table(self):
        if self._cumulative is None:
            probs = np.concatenate(
                [
                    np.exp(self.log_substitution).ravel(),
                    np.exp(self.log_deletion),
                    np.exp(self.log_insertion),
                    [math.exp(self.log_termination)],
                ]
            )
            cumulative = np.cumsum(probs)
            cumulative /= cumulative[-1]
            ops = list(self.edit_ops()) + [TERMINATE]
            self._cumulative = (cumulative, ops)
        return self._cumulative

    def sample(self, rng=None) -> Alignment:
        """Draw one terminated operation sequence.

        Operations are drawn independently until the end marker comes
        up, so the draw terminates with probability one; a model with a
        zero-probability end marker is refused.
        """
        if self.log_termination == NEG_INF:
            raise ConfigurationError(
                "cannot sample: zero end-marker probability never terminates"
            )
        rng = _as_rng(rng)
        cumulative, ops = self._sampling_table()
        drawn = []
        while True:
            op = ops[int(np.searchsorted(cumulative, rng.random(), side="right"))]
            drawn.append(op)
            if op.is_terminator:
                return Alignment(tuple(drawn))


def sequence_length_probability(n: int, transducer: Transducer) -> float:
    """Probability that a sampled sequence uses exactly ``n`` edit operations.

    Geometric in ``n``: (1 - p_end)^n * p_end.
    """
    if n < 0:
        raise InputError("sequence length must be nonnegative")
    p_end = math.exp(transducer.log_termination)
    if p_end <= 0.0:
        raise ConfigurationError("zero end-marker probability has no length law")
    return (1.0 - p_end) ** n * p_end


# ----------------------------------------------------------------------
# lattice kernels (list-of-lists of natural-log values, for speed)


def _forward_rows(xs, ys, sub, dele, ins):
    # rows[t][v] = log p(prefix pair x^t, y^v); no end-marker factor
    T, V = len(xs), len(ys)
    rows = [[NEG_INF] * (V + 1) for _ in range(T + 1)]
    row = rows[0]
    row[0] = 0.0
    for v in range(1, V + 1):
        row[v] = row[v - 1] + ins[ys[v - 1]]
    for t in range(1, T + 1):
        prev = rows[t - 1]
        cur = rows[t]
        xi = xs[t - 1]
        d = dele[xi]
        srow = sub[xi]
        cur[0] = prev[0] + d
        for v in range(1, V + 1):
            yv = ys[v - 1]
            g = _logaddexp(srow[yv] + prev[v - 1], d + prev[v])
            cur[v] = _logaddexp(g, ins[yv] + cur[v - 1])
    return rows


def _backward_rows(xs, ys, sub, dele, ins, end):
    # rows[t][v] = log p(terminated suffix pair | position (t, v))
    T, V = len(xs), len(ys)
    rows = [[NEG_INF] * (V + 1) for _ in range(T + 1)]
    last = rows[T]
    last[V] = end
    for v in range(V - 1, -1, -1):
        last[v] = ins[ys[v]] + last[v + 1]
    for t in range(T - 1, -1, -1):
        cur = rows[t]
        nxt = rows[t + 1]
        xi = xs[t]
        d = dele[xi]
        srow = sub[xi]
        cur[V] = d + nxt[V]
        for v in range(V - 1, -1, -1):
            yv = ys[v]
            g = _logaddexp(srow[yv] + nxt[v + 1], d + nxt[v])
            cur[v] = _logaddexp(g, ins[yv] + cur[v + 1])
    return rows


def _viterbi_rows(xs, ys, sub, dele, ins):
    T, V = len(xs), len(ys)
    rows = [[NEG_INF] * (V + 1) for _ in range(T + 1)]
    row = rows[0]
    row[0] = 0.0
    for v in range(1, V + 1):
        row[v] = row[v - 1] + ins[ys[v - 1]]
    for t in range(1, T + 1):
        prev = rows[t - 1]
        cur = rows[t]
        xi = xs[t - 1]
        d = dele[xi]
        srow = sub[xi]
        cur[0] = prev[0] + d
        for v in range(1, V + 1):
            yv = ys[v - 1]
            best = srow[yv] + prev[v - 1]
            cand = d + prev[v]
            if cand > best:
                best = cand
            cand = ins[yv] + cur[v - 1]
            if cand > best:
                best = cand
            cur[v] = best
    return rows


def _encode_pair(x, y, transducer):
    xs = transducer.source_alphabet.encode(x)
    ys = transducer.target_alphabet.encode(y)
    return xs, ys


# ----------------------------------------------------------------------
# public evaluation API


def forward_evaluate(x: Iterable[str], y: Iterable[str], transducer: Transducer) -> np.ndarray:
    """Prefix-pair log probabilities as a (T+1, V+1) array.

    Cell (t, v) holds the natural-log probability of generating the
    prefix pair; the final cell additionally includes the end marker,
    so it is the log probability of the complete pair.
    """
    xs, ys = _encode_pair(x, y, transducer)
    rows = _forward_rows(xs, ys, transducer._sub, transducer._del, transducer._ins)
    rows[len(xs)][len(ys)] += transducer.log_termination
    return np.array(rows)


def backward_evaluate(x: Iterable[str], y: Iterable[str], transducer: Transducer) -> np.ndarray:
    """Terminated suffix-pair log probabilities as a (T+1, V+1) array.

    Cell (t, v) holds the natural-log probability of generating the
    remaining suffix pair and then the end marker; cell (T, V) is the
    log end-marker probability and cell (0, 0) equals the final forward
    cell.
    """
    xs, ys = _encode_pair(x, y, transducer)
    rows = _backward_rows(
        xs, ys, transducer._sub, transducer._del, transducer._ins, transducer.log_termination
    )
    return np.array(rows)


def log_joint_probability(x: Iterable[str], y: Iterable[str], transducer: Transducer) -> float:
    """Natural-log probability of the pair, aggregated over all alignments."""
    xs, ys = _encode_pair(x, y, transducer)
    rows = _forward_rows(xs, ys, transducer._sub, transducer._del, transducer._ins)
    return rows[len(xs)][len(ys)] + transducer.log_termination


def joint_probability(x: Iterable[str], y: Iterable[str], transducer: Transducer) -> float:
    """Probability of the pair, aggregated over all alignments."""
    return math.exp(log_joint_probability(x, y, transducer))


def stochastic_distance(x: Iterable[str], y: Iterable[str], transducer: Transducer) -> float:
    """Aggregate transduction distance in bits: -log2 p(x, y).

    Infinite when the pair has probability zero.
    """
    return -log_joint_probability(x, y, transducer) / LN2


def viterbi_distance(
    x: Iterable[str], y: Iterable[str], transducer: Transducer
) -> tuple[float, Alignment | None]:
    """Best-alignment distance in bits, with one maximizing alignment.

    The value is -log2 of the probability of the most likely terminated
    operation sequence for the pair.  Ties during backtracking prefer
    substitution, then deletion, then insertion.  Returns ``(inf, None)``
    when no alignment has positive probability.
    """
    x = tuple(x)
    y = tuple(y)
    xs, ys = _encode_pair(x, y, transducer)
    sub, dele, ins = transducer._sub, transducer._del, transducer._ins
    rows = _viterbi_rows(xs, ys, sub, dele, ins)
    T, V = len(xs), len(ys)
    best = rows[T][V] + transducer.log_termination
    if best == NEG_INF:
        return math.inf, None
    ops: list[EditOp] = [TERMINATE]
    t, v = T, V
    while t > 0 or v > 0:
        value = rows[t][v]
        if t > 0 and v > 0 and sub[xs[t - 1]][ys[v - 1]] + rows[t - 1][v - 1] == value:
            ops.append(EditOp(x[t - 1], y[v - 1]))
            t -= 1
            v -= 1
        elif t > 0 and dele[xs[t - 1]] + rows[t - 1][v] == value:
            ops.append(EditOp(x[t - 1], None))
            t -= 1
        else:
            ops.append(EditOp(None, y[v - 1]))
            v -= 1
    return -best / LN2, Alignment(tuple(reversed(ops)))


def classic_edit_distance(
    x: Iterable[str], y: Iterable[str], costs: CostFunction
) -> tuple[float, Alignment | None]:
    """Minimum-cost edit distance with one minimizing alignment.

    The standard additive recursion over substitution, deletion, and
    insertion costs; the end marker closes the alignment at no cost.
    Ties prefer substitution, then deletion, then insertion.  Returns
    ``(inf, None)`` when every alignment is forbidden by infinite costs.
    """
    x = tuple(x)
    y = tuple(y)
    xs = costs.source_alphabet.encode(x)
    ys = costs.target_alphabet.encode(y)
    sub = costs.substitution.tolist()
    dele = costs.deletion.tolist()
    ins = costs.insertion.tolist()
    T, V = len(xs), len(ys)
    rows = [[math.inf] * (V + 1) for _ in range(T + 1)]
    row = rows[0]
    row[0] = 0.0
    for v in range(1, V + 1):
        row[v] = row[v - 1] + ins[ys[v - 1]]
    for t in range(1, T + 1):
        prev = rows[t - 1]
        cur = rows[t]
        xi = xs[t - 1]
        d = dele[xi]
        srow = sub[xi]
        cur[0] = prev[0] + d
        for v in range(1, V + 1):
            yv = ys[v - 1]
            best = srow[yv] + prev[v - 1]
            cand = d + prev[v]
            if cand < best:
                best = cand
            cand = ins[yv] + cur[v - 1]
            if cand < best:
                best = cand
            cur[v] = best
    total = rows[T][V]
    if math.isinf(total):
        return math.inf, None
    ops: list[EditOp] = [TERMINATE]
    t, v = T, V
    while t > 0 or v > 0:
        value = rows[t][v]
        if t > 0 and v > 0 and sub[xs[t - 1]][ys[v - 1]] + rows[t - 1][v - 1] == value:
            ops.append(EditOp(x[t - 1], y[v - 1]))
            t -= 1
            v -= 1
        elif t > 0 and dele[xs[t - 1]] + rows[t - 1][v] == value:
            ops.append(EditOp(x[t - 1], None))
            t -= 1
        else:
            ops.append(EditOp(None, y[v - 1]))
            v -= 1
    return total, Alignment(tuple(reversed(ops)))


def transducer_bit_costs(transducer: Transducer) -> CostFunction:
    """Edit costs c(z) = -log2 p(z) induced by a stochastic model.

    Zero-probability operations get infinite cost.  The end marker is
    not part of the cost function, so the classic distance under these
    costs differs from the best-alignment distance by exactly
    -log2 p(end).
    """
    with np.errstate(divide="ignore"):
        return CostFunction(
            transducer.source_alphabet,
            transducer.target_alphabet,
            -transducer.log_substitution / LN2,
            -transducer.log_deletion / LN2,
            -transducer.log_insertion / LN2,
        )
