"""Model persistence in a versioned, line-oriented text format.

The first line names the format, its version, and the model kind, the
next lines carry the two alphabets, and the rest is one record per
parameter.  Natural-log probabilities are serialized through Python's
shortest round-tripping float representation, so a save/load cycle
reproduces every parameter bit for bit.  Records for zero-probability
parameters are omitted; a missing record means log probability -inf.

Record shapes:

    sub <a> <b> <logp>        flat edit models
    del <a> <logp>
    ins <b> <logp>
    end <logp>
    omega <logd> <logi> <logs>   factored models
    dsub <a> <b> <logp>
    ddel <a> <logp>
    dins <b> <logp>
    component <logweight>        opens one mixture component
    adapt-word <0|1>             classifier switches
    adapt-entry <0|1>
    entry <word> <form tokens...> <logp>
"""

from __future__ import annotations

import math
from typing import IO, Iterable

import numpy as np

from .alphabet import Alphabet
from .classifier import ClassifierModel, Lexicon
from .errors import InputError
from .lengths import FactoredTransducer
from .mixture import MixtureTransducer
from .transducer import NEG_INF, Transducer

MAGIC = "stredit-model"
FORMAT_VERSION = "1"

Model = Transducer | FactoredTransducer | MixtureTransducer | ClassifierModel | Lexicon


def _format_log(value: float) -> str:
    return repr(float(value))


def _parse_log(text: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"line {line_no}: bad log probability {text!r}") from None
    if math.isnan(value) or value == math.inf:
        raise InputError(f"line {line_no}: bad log probability {text!r}")
    return value


def _kind_of(model: Model) -> str:
    if isinstance(model, Transducer):
        return "transducer"
    if isinstance(model, FactoredTransducer):
        return "factored"
    if isinstance(model, MixtureTransducer):
        return "mixture"
    if isinstance(model, ClassifierModel):
        return "classifier"
    if isinstance(model, Lexicon):
        return "lexicon"
    raise InputError(f"cannot serialize {type(model).__name__}")


def _transducer_records(t: Transducer) -> Iterable[str]:
    A, B = t.source_alphabet, t.target_alphabet
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            logp = t.log_substitution[i, j]
            if logp != NEG_INF:
                yield f"sub {a} {b} {_format_log(logp)}"
    for i, a in enumerate(A):
        logp = t.log_deletion[i]
        if logp != NEG_INF:
            yield f"del {a} {_format_log(logp)}"
    for j, b in enumerate(B):
        logp = t.log_insertion[j]
        if logp != NEG_INF:
            yield f"ins {b} {_format_log(logp)}"
    if t.log_termination != NEG_INF:
        yield f"end {_format_log(t.log_termination)}"


def _factored_records(f: FactoredTransducer) -> Iterable[str]:
    yield "omega " + " ".join(_format_log(v) for v in f.log_omega)
    A, B = f.source_alphabet, f.target_alphabet
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            if f.log_substitution[i, j] != NEG_INF:
                yield f"dsub {a} {b} {_format_log(f.log_substitution[i, j])}"
    for i, a in enumerate(A):
        if f.log_deletion[i] != NEG_INF:
            yield f"ddel {a} {_format_log(f.log_deletion[i])}"
    for j, b in enumerate(B):
        if f.log_insertion[j] != NEG_INF:
            yield f"dins {b} {_format_log(f.log_insertion[j])}"


def _lexicon_records(lexicon: Lexicon) -> Iterable[str]:
    for word, form, _ in lexicon.entries():
        logp = lexicon.log_probability(word, form)
        if logp == NEG_INF:
            continue
        yield "entry " + " ".join([word, *form, _format_log(logp)])


def save_model(model: Model, path) -> None:
    """Write any supported model kind to a text file."""
    with open(path, "w", encoding="utf-8") as handle:
        write_model(model, handle)


def write_model(model: Model, handle: IO[str]) -> None:
    kind = _kind_of(model)
    if isinstance(model, (Transducer, FactoredTransducer, MixtureTransducer)):
        source, target = model.source_alphabet, model.target_alphabet
    elif isinstance(model, ClassifierModel):
        source = model.transducer.source_alphabet
        target = model.transducer.target_alphabet
    else:
        source, target = model.source_alphabet, None
    lines = [f"{MAGIC} {FORMAT_VERSION} {kind}"]
    lines.append("source-alphabet " + " ".join(source))
    if target is not None:
        lines.append("target-alphabet " + " ".join(target))
    if isinstance(model, Transducer):
        lines.extend(_transducer_records(model))
    elif isinstance(model, FactoredTransducer):
        lines.extend(_factored_records(model))
    elif isinstance(model, MixtureTransducer):
        for weight, component in zip(model.log_weights, model.components):
            lines.append(f"component {_format_log(weight)}")
            lines.extend(_transducer_records(component))
    elif isinstance(model, ClassifierModel):
        if isinstance(model.transducer, MixtureTransducer):
            raise InputError("classifier files hold a single flat edit model")
        lines.append(f"adapt-word {int(model.adapt_word)}")
        lines.append(f"adapt-entry {int(model.adapt_entry)}")
        lines.extend(_transducer_records(model.transducer))
        lines.extend(_lexicon_records(model.lexicon))
    else:
        lines.extend(_lexicon_records(model))
    handle.write("\n".join(lines) + "\n")


def load_model(path) -> Model:
    """Read any supported model kind from a text file."""
    with open(path, "r", encoding="utf-8") as handle:
        return read_model(handle)


def read_model(handle: IO[str]) -> Model:
    lines = handle.read().splitlines()
    if not lines:
        raise InputError("line 1: empty model file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != MAGIC:
        raise InputError("line 1: not a model file")
    if header[1] != FORMAT_VERSION:
        raise InputError(f"line 1: unsupported format version {header[1]!r}")
    kind = header[2]
    if kind not in ("transducer", "factored", "mixture", "classifier", "lexicon"):
        raise InputError(f"line 1: unknown model kind {kind!r}")

    def parse_alphabet(index: int, label: str) -> Alphabet:
        if index >= len(lines):
            raise InputError(f"line {index + 1}: missing {label} line")
        fields = lines[index].split()
        if not fields or fields[0] != label:
            raise InputError(f"line {index + 1}: expected {label}")
        if len(fields) < 2:
            raise InputError(f"line {index + 1}: empty {label}")
        return Alphabet(fields[1:])

    source = parse_alphabet(1, "source-alphabet")
    if kind == "lexicon":
        body_start = 2
        target = None
    else:
        target = parse_alphabet(2, "target-alphabet")
        body_start = 3
    body = [(i + 1, lines[i]) for i in range(body_start, len(lines)) if lines[i].strip()]

    if kind == "transducer":
        t, rest = _read_transducer(source, target, body)
        if rest:
            raise InputError(f"line {rest[0][0]}: unexpected record {rest[0][1].split()[0]!r}")
        return t
    if kind == "factored":
        return _read_factored(source, target, body)
    if kind == "mixture":
        return _read_mixture(source, target, body)
    if kind == "classifier":
        return _read_classifier(source, target, body)
    return _read_lexicon(source, body)


def _read_transducer(source, target, body):
    """Consume flat-model records; returns the model and leftover lines."""
    sub = np.full((len(source), len(target)), NEG_INF)
    dele = np.full(len(source), NEG_INF)
    ins = np.full(len(target), NEG_INF)
    end = NEG_INF
    consumed = 0
    for line_no, line in body:
        fields = line.split()
        key = fields[0]
        try:
            if key == "sub" and len(fields) == 4:
                sub[source.index(fields[1]), target.index(fields[2])] = _parse_log(
                    fields[3], line_no
                )
            elif key == "del" and len(fields) == 3:
                dele[source.index(fields[1])] = _parse_log(fields[2], line_no)
            elif key == "ins" and len(fields) == 3:
                ins[target.index(fields[1])] = _parse_log(fields[2], line_no)
            elif key == "end" and len(fields) == 2:
                end = _parse_log(fields[1], line_no)
            elif key in ("sub", "del", "ins", "end"):
                raise InputError(f"line {line_no}: malformed {key!r} record")
            else:
                break
        except InputError as exc:
            if "is not in the alphabet" in str(exc):
                raise InputError(f"line {line_no}: {exc}") from None
            raise
        consumed += 1
    return Transducer(source, target, sub, dele, ins, end), body[consumed:]


def _read_factored(source, target, body):
    log_omega = None
    sub = np.full((len(source), len(target)), NEG_INF)
    dele = np.full(len(source), NEG_INF)
    ins = np.full(len(target), NEG_INF)
    for line_no, line in body:
        fields = line.split()
        key = fields[0]
        try:
            if key == "omega" and len(fields) == 4:
                log_omega = np.array([_parse_log(f, line_no) for f in fields[1:]])
            elif key == "dsub" and len(fields) == 4:
                sub[source.index(fields[1]), target.index(fields[2])] = _parse_log(
                    fields[3], line_no
                )
            elif key == "ddel" and len(fields) == 3:
                dele[source.index(fields[1])] = _parse_log(fields[2], line_no)
            elif key == "dins" and len(fields) == 3:
                ins[target.index(fields[1])] = _parse_log(fields[2], line_no)
            else:
                raise InputError(f"line {line_no}: unexpected record {key!r}")
        except InputError as exc:
            if "is not in the alphabet" in str(exc):
                raise InputError(f"line {line_no}: {exc}") from None
            raise
    if log_omega is None:
        raise InputError("missing omega record in factored model")
    return FactoredTransducer.from_log_parameters(source, target, log_omega, dele, ins, sub)


def _read_mixture(source, target, body):
    log_weights = []
    components = []
    index = 0
    while index < len(body):
        line_no, line = body[index]
        fields = line.split()
        if fields[0] != "component" or len(fields) != 2:
            raise InputError(f"line {line_no}: expected a component record")
        log_weights.append(_parse_log(fields[1], line_no))
        index += 1
        start = index
        while index < len(body) and body[index][1].split()[0] != "component":
            index += 1
        component, rest = _read_transducer(source, target, body[start:index])
        if rest:
            raise InputError(f"line {rest[0][0]}: unexpected record in component")
        components.append(component)
    if not components:
        raise InputError("mixture file holds no components")
    log_weights = np.array(log_weights)
    return MixtureTransducer(components, np.exp(log_weights), _log_weights=log_weights)


def _parse_entry(fields, source, line_no):
    if len(fields) < 3:
        raise InputError(f"line {line_no}: malformed entry record")
    word = fields[1]
    form = tuple(fields[2:-1])
    for token in form:
        if token not in source:
            raise InputError(f"line {line_no}: symbol {token!r} is not in the alphabet")
    return (word, form), _parse_log(fields[-1], line_no)


def _read_classifier(source, target, body):
    switches = {"adapt-word": True, "adapt-entry": True}
    index = 0
    while index < len(body):
        fields = body[index][1].split()
        if fields[0] in switches and len(fields) == 2 and fields[1] in ("0", "1"):
            switches[fields[0]] = fields[1] == "1"
            index += 1
        else:
            break
    transducer, rest = _read_transducer(source, target, body[index:])
    log_probs = {}
    for line_no, line in rest:
        fields = line.split()
        if fields[0] != "entry":
            raise InputError(f"line {line_no}: unexpected record {fields[0]!r}")
        key, logp = _parse_entry(fields, source, line_no)
        if key in log_probs:
            raise InputError(f"line {line_no}: duplicate entry for {key!r}")
        log_probs[key] = logp
    if not log_probs:
        raise InputError("classifier file holds no lexicon entries")
    return ClassifierModel(
        transducer,
        Lexicon._from_log_probabilities(source, log_probs),
        adapt_word=switches["adapt-word"],
        adapt_entry=switches["adapt-entry"],
    )


def _read_lexicon(source, body):
    log_probs = {}
    for line_no, line in body:
        fields = line.split()
        if fields[0] != "entry":
            raise InputError(f"line {line_no}: unexpected record {fields[0]!r}")
        key, logp = _parse_entry(fields, source, line_no)
        if key in log_probs:
            raise InputError(f"line {line_no}: duplicate entry for {key!r}")
        log_probs[key] = logp
    if not log_probs:
        raise InputError("lexicon file holds no entries")
    return Lexicon._from_log_probabilities(source, log_probs)
