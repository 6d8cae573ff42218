"""Alphabets, edit operations, alignments, and edit-cost tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import ConfigurationError, InputError

#: Reserved display spelling for the empty side of an edit operation.
EPSILON = "<eps>"
#: Reserved display spelling for the end-of-edit-sequence marker.
TERMINATOR = "<end>"

_RESERVED = frozenset({EPSILON, TERMINATOR})


class EditOp(NamedTuple):
    """A primitive edit operation over a pair of alphabets.

    ``source`` and ``target`` are symbol tokens, or None for the empty
    side: ``(a, b)`` substitutes a with b, ``(a, None)`` deletes a, and
    ``(None, b)`` inserts b.  The pair ``(None, None)`` is reserved for
    the distinguished end marker :data:`TERMINATE`; a "copy nothing"
    operation therefore cannot be represented.
    """

    source: str | None
    target: str | None

    @property
    def is_substitution(self) -> bool:
        return self.source is not None and self.target is not None

    @property
    def is_deletion(self) -> bool:
        return self.source is not None and self.target is None

    @property
    def is_insertion(self) -> bool:
        return self.source is None and self.target is not None

    @property
    def is_terminator(self) -> bool:
        return self.source is None and self.target is None

    def __str__(self) -> str:
        if self.is_terminator:
            return TERMINATOR
        return f"{self.source or EPSILON}:{self.target or EPSILON}"


#: The end-of-edit-sequence marker.
TERMINATE = EditOp(None, None)


class Alphabet:
    """An ordered set of distinct symbol tokens.

    Tokens are opaque non-empty strings, so multi-character symbols such
    as phoneme names work directly.  Tokens may not contain whitespace
    and may not use the reserved spellings for epsilon or the end marker.
    """

    __slots__ = ("_symbols", "_index")

    def __init__(self, symbols: Iterable[str]):
        symbols = tuple(symbols)
        if not symbols:
            raise ConfigurationError("an alphabet must contain at least one symbol")
        index: dict[str, int] = {}
        for symbol in symbols:
            if not isinstance(symbol, str) or not symbol:
                raise ConfigurationError(f"invalid alphabet symbol: {symbol!r}")
            if symbol in _RESERVED:
                raise ConfigurationError(f"symbol {symbol!r} is reserved")
            if any(ch.isspace() for ch in symbol):
                raise ConfigurationError(f"symbol {symbol!r} contains whitespace")
            if symbol in index:
                raise ConfigurationError(f"duplicate alphabet symbol {symbol!r}")
            index[symbol] = len(index)
        self._symbols = symbols
        self._index = index

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise InputError(f"symbol {symbol!r} is not in the alphabet") from None

    def encode(self, tokens: Iterable[str]) -> list[int]:
        """Map a token sequence to a list of symbol indices."""
        index = self._index
        try:
            return [index[token] for token in tokens]
        except KeyError as exc:
            raise InputError(f"symbol {exc.args[0]!r} is not in the alphabet") from None

    @property
    def symbols(self) -> tuple[str, ...]:
        return self._symbols

    def __len__(self) -> int:
        return len(self._symbols)

    def __iter__(self) -> Iterator[str]:
        return iter(self._symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._index

    def __getitem__(self, i: int) -> str:
        return self._symbols[i]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Alphabet) and self._symbols == other._symbols

    def __hash__(self) -> int:
        return hash(self._symbols)

    def __repr__(self) -> str:
        return f"Alphabet({list(self._symbols)!r})"


def as_string(tokens: Iterable[str], alphabet: Alphabet | None = None) -> tuple[str, ...]:
    """Normalize a token sequence to a tuple, optionally validating membership."""
    string = tuple(tokens)
    if alphabet is not None:
        for token in string:
            if token not in alphabet:
                raise InputError(f"symbol {token!r} is not in the alphabet")
    return string


@dataclass(frozen=True)
class Alignment:
    """A terminated edit-operation sequence together with its yield.

    The operation sequence always ends with :data:`TERMINATE` and
    contains no earlier end marker.  Reading off the non-empty sources
    and targets reproduces the string pair the sequence generates.
    """

    ops: tuple[EditOp, ...]

    def __post_init__(self) -> None:
        if not self.ops or self.ops[-1] != TERMINATE:
            raise ConfigurationError("an alignment must end with the end marker")
        if any(op.is_terminator for op in self.ops[:-1]):
            raise ConfigurationError("the end marker may only appear last")

    @property
    def source(self) -> tuple[str, ...]:
        return tuple(op.source for op in self.ops if op.source is not None)

    @property
    def target(self) -> tuple[str, ...]:
        return tuple(op.target for op in self.ops if op.target is not None)

    @property
    def edit_count(self) -> int:
        """Number of edit operations, excluding the end marker."""
        return len(self.ops) - 1

    def __iter__(self) -> Iterator[EditOp]:
        return iter(self.ops)

    def __str__(self) -> str:
        return " ".join(str(op) for op in self.ops)


class CostFunction:
    """Nonnegative costs for the edit operations over an alphabet pair.

    Covers substitutions, deletions, and insertions; the end marker
    carries no cost.  Costs may be infinite to forbid an operation.
    """

    __slots__ = ("source_alphabet", "target_alphabet", "substitution", "deletion", "insertion")

    def __init__(
        self,
        source_alphabet: Alphabet,
        target_alphabet: Alphabet,
        substitution: np.ndarray,
        deletion: np.ndarray,
        insertion: np.ndarray,
    ):
        substitution = np.asarray(substitution, dtype=float)
        deletion = np.asarray(deletion, dtype=float)
        insertion = np.asarray(insertion, dtype=float)
        if substitution.shape != (len(source_alphabet), len(target_alphabet)):
            raise ConfigurationError("substitution cost table has the wrong shape")
        if deletion.shape != (len(source_alphabet),):
            raise ConfigurationError("deletion cost table has the wrong shape")
        if insertion.shape != (len(target_alphabet),):
            raise ConfigurationError("insertion cost table has the wrong shape")
        for table in (substitution, deletion, insertion):
            if np.isnan(table).any() or (table < 0).any():
                raise ConfigurationError("edit costs must be nonnegative")
            table.setflags(write=False)
        self.source_alphabet = source_alphabet
        self.target_alphabet = target_alphabet
        self.substitution = substitution
        self.deletion = deletion
        self.insertion = insertion

    @classmethod
    def from_table(
        cls,
        source_alphabet: Alphabet,
        target_alphabet: Alphabet,
        costs: Mapping[EditOp, float],
        default: float = np.inf,
    ) -> "CostFunction":
        """Build a cost function from a sparse operation-to-cost mapping."""
        sub = np.full((len(source_alphabet), len(target_alphabet)), default)
        dele = np.full(len(source_alphabet), default)
        ins = np.full(len(target_alphabet), default)
        for op, value in costs.items():
            if op.is_substitution:
                sub[source_alphabet.index(op.source), target_alphabet.index(op.target)] = value
            elif op.is_deletion:
                dele[source_alphabet.index(op.source)] = value
            elif op.is_insertion:
                ins[target_alphabet.index(op.target)] = value
            else:
                raise ConfigurationError("the end marker cannot carry a cost")
        return cls(source_alphabet, target_alphabet, sub, dele, ins)

    def cost(self, op: EditOp) -> float:
        if op.is_substitution:
            return float(
                self.substitution[
                    self.source_alphabet.index(op.source), self.target_alphabet.index(op.target)
                ]
            )
        if op.is_deletion:
            return float(self.deletion[self.source_alphabet.index(op.source)])
        if op.is_insertion:
            return float(self.insertion[self.target_alphabet.index(op.target)])
        raise ConfigurationError("the end marker carries no cost")


def levenshtein_costs(source_alphabet: Alphabet, target_alphabet: Alphabet) -> CostFunction:
    """Unit costs with free identity substitutions.

    Identity is defined only for symbols present in both alphabets; all
    other substitutions, deletions, and insertions cost one.
    """
    sub = np.ones((len(source_alphabet), len(target_alphabet)))
    for i, symbol in enumerate(source_alphabet):
        if symbol in target_alphabet:
            sub[i, target_alphabet.index(symbol)] = 0.0
    return CostFunction(
        source_alphabet,
        target_alphabet,
        sub,
        np.ones(len(source_alphabet)),
        np.ones(len(target_alphabet)),
    )
