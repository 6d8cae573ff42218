"""Finite mixtures of memoryless edit models.

A mixture assigns a string pair the weighted sum of its component
probabilities.  Because component choice costs only -log2 of its
weight, the induced distance behaves like the minimum of the component
distances shifted by the weight costs.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError
from .transducer import (
    LN2,
    NEG_INF,
    Transducer,
    _logaddexp,
    log_joint_probability,
    viterbi_distance,
)

_WEIGHT_TOL = 1e-9


class MixtureTransducer:
    """A convex combination of edit models sharing one alphabet pair."""

    __slots__ = ("components", "weights", "log_weights", "source_alphabet", "target_alphabet")

    def __init__(
        self,
        components: Sequence[Transducer],
        weights: Iterable[float],
        _log_weights: np.ndarray | None = None,
    ):
        # _log_weights lets the model loader keep serialized log values
        # canonical instead of re-deriving them from the linear weights.
        components = tuple(components)
        weights = np.asarray(list(weights), dtype=float)
        if not components:
            raise ConfigurationError("a mixture needs at least one component")
        if weights.shape != (len(components),):
            raise ConfigurationError("one mixing weight is required per component")
        if (weights < 0).any() or np.isnan(weights).any():
            raise ConfigurationError("mixing weights must be nonnegative")
        if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
            raise ConfigurationError(f"mixing weights sum to {weights.sum()!r}, not one")
        first = components[0]
        for component in components[1:]:
            if (
                component.source_alphabet != first.source_alphabet
                or component.target_alphabet != first.target_alphabet
            ):
                raise ConfigurationError("mixture components must share alphabets")
        if _log_weights is None:
            with np.errstate(divide="ignore"):
                log_weights = np.log(weights)
        else:
            log_weights = np.asarray(_log_weights, dtype=float)
        weights.setflags(write=False)
        log_weights.setflags(write=False)
        self.components = components
        self.weights = weights
        self.log_weights = log_weights
        self.source_alphabet = first.source_alphabet
        self.target_alphabet = first.target_alphabet

    def __len__(self) -> int:
        return len(self.components)

    def __repr__(self) -> str:
        return f"MixtureTransducer(k={len(self.components)})"


def uniform_mixture(components: Sequence[Transducer]) -> MixtureTransducer:
    """Mix the given components with equal weights 1/k."""
    components = tuple(components)
    if not components:
        raise ConfigurationError("a mixture needs at least one component")
    k = len(components)
    return MixtureTransducer(components, [1.0 / k] * k)


def mixture_log_joint(
    x: Sequence[str], y: Sequence[str], mixture: MixtureTransducer, kind: str = "stochastic"
) -> float:
    """Natural-log mixture probability of a pair.

    ``kind`` selects the per-component pair probability: the aggregate
    over all alignments ("stochastic") or that of the single best
    alignment ("viterbi").
    """
    if kind not in ("stochastic", "viterbi"):
        raise ConfigurationError("kind must be 'stochastic' or 'viterbi'")
    total = NEG_INF
    for log_weight, component in zip(mixture.log_weights, mixture.components):
        if log_weight == NEG_INF:
            continue
        if kind == "stochastic":
            logp = log_joint_probability(x, y, component)
        else:
            bits, _ = viterbi_distance(x, y, component)
            logp = -bits * LN2
        total = _logaddexp(total, float(log_weight) + logp)
    return total


def mixture_probability(x: Sequence[str], y: Sequence[str], mixture: MixtureTransducer) -> float:
    """Weighted sum of the component probabilities of the pair."""
    return math.exp(mixture_log_joint(x, y, mixture))


def mixture_stochastic_distance(
    x: Sequence[str], y: Sequence[str], mixture: MixtureTransducer
) -> float:
    """Mixture distance in bits: -log2 of the mixture pair probability.

    Bounded above by min over components of (distance - log2 weight).
    """
    return -mixture_log_joint(x, y, mixture) / LN2
