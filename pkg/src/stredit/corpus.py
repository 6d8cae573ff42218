"""Corpus and alphabet files.

Corpora are UTF-8 text, one sample per line, with a literal tab between
fields and space-separated symbol tokens inside a field, so
multi-character tokens need no escaping.  Lines starting with ``#`` are
comments and blank lines are ignored; anything else must parse, and
unknown tokens are rejected with their line number rather than dropped.

    pair corpus:    x-tokens <TAB> y-tokens
    labeled corpus: class <TAB> y-tokens

Alphabet files list whitespace-separated tokens, with the same comment
convention.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .alphabet import Alphabet
from .errors import InputError

PairSample = tuple[tuple[str, ...], tuple[str, ...]]
LabeledSample = tuple[str, tuple[str, ...]]


def _data_lines(text: str):
    for line_no, line in enumerate(text.splitlines(), start=1):
        # a tab-only line is a record with two empty fields, not a blank
        if not line.strip() and "\t" not in line:
            continue
        if line.lstrip().startswith("#"):
            continue
        yield line_no, line


def _check_tokens(tokens: Sequence[str], alphabet: Alphabet | None, line_no: int):
    if alphabet is None:
        return
    for token in tokens:
        if token not in alphabet:
            raise InputError(f"line {line_no}: unknown symbol {token!r}")


def parse_pair_corpus(
    text: str,
    source_alphabet: Alphabet | None = None,
    target_alphabet: Alphabet | None = None,
) -> list[PairSample]:
    pairs: list[PairSample] = []
    for line_no, line in _data_lines(text):
        fields = line.split("\t")
        if len(fields) != 2:
            raise InputError(f"line {line_no}: expected two tab-separated fields")
        x = tuple(fields[0].split())
        y = tuple(fields[1].split())
        _check_tokens(x, source_alphabet, line_no)
        _check_tokens(y, target_alphabet, line_no)
        pairs.append((x, y))
    return pairs


def read_pair_corpus(
    path,
    source_alphabet: Alphabet | None = None,
    target_alphabet: Alphabet | None = None,
) -> list[PairSample]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_pair_corpus(handle.read(), source_alphabet, target_alphabet)


def format_pair_corpus(pairs: Iterable[PairSample]) -> str:
    lines = [" ".join(x) + "\t" + " ".join(y) for x, y in pairs]
    return "\n".join(lines) + "\n" if lines else ""


def write_pair_corpus(pairs: Iterable[PairSample], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_pair_corpus(pairs))


def parse_labeled_corpus(
    text: str, target_alphabet: Alphabet | None = None
) -> list[LabeledSample]:
    samples: list[LabeledSample] = []
    for line_no, line in _data_lines(text):
        fields = line.split("\t")
        if len(fields) != 2:
            raise InputError(f"line {line_no}: expected two tab-separated fields")
        word = fields[0].strip()
        if not word:
            raise InputError(f"line {line_no}: empty class label")
        y = tuple(fields[1].split())
        _check_tokens(y, target_alphabet, line_no)
        samples.append((word, y))
    return samples


def read_labeled_corpus(path, target_alphabet: Alphabet | None = None) -> list[LabeledSample]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_labeled_corpus(handle.read(), target_alphabet)


def format_labeled_corpus(samples: Iterable[LabeledSample]) -> str:
    lines = [word + "\t" + " ".join(y) for word, y in samples]
    return "\n".join(lines) + "\n" if lines else ""


def write_labeled_corpus(samples: Iterable[LabeledSample], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_labeled_corpus(samples))


def parse_alphabet(text: str) -> Alphabet:
    tokens: list[str] = []
    for _, line in _data_lines(text):
        tokens.extend(line.split())
    return Alphabet(tokens)


def read_alphabet(path) -> Alphabet:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_alphabet(handle.read())


def write_alphabet(alphabet: Alphabet, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(alphabet) + "\n")


def infer_alphabet(strings: Iterable[Sequence[str]]) -> Alphabet:
    """The sorted set of tokens appearing in the given strings."""
    tokens = sorted({token for string in strings for token in string})
    if not tokens:
        raise InputError("cannot infer an alphabet from empty data")
    return Alphabet(tokens)
