"""Size-principle Bayesian learner.

The likelihood of ``n`` examples under hypothesis ``h`` is ``|h| ** -n`` when
every example lies in ``h`` and zero otherwise. Products are taken directly in
double precision: the worst case here is (1/500)**4, nowhere near underflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .hypotheses import Element, Hypothesis, HypothesisSpace, NoCompatibleHypothesis

THRESHOLD = 0.5


class DegeneratePrior(ValueError):
    """All prior mass sits on hypotheses incompatible with the input."""


@dataclass(frozen=True)
class Prior:
    """Uniform, or a table of non-negative weights keyed by hypothesis name.

    Hypotheses absent from a tabulated prior get weight 0.
    """

    kind: str = "uniform"
    weights: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("uniform", "tabulated"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == "tabulated":
            vals = np.asarray(list(self.weights.values()), dtype=float)
            if vals.size == 0 or np.any(vals < 0) or not np.isfinite(vals.sum()) or vals.sum() <= 0:
                raise ValueError("tabulated prior weights must be non-negative with a positive finite sum")

    @classmethod
    def tabulated(cls, weights: Mapping[str, float]) -> "Prior":
        return cls("tabulated", dict(weights))

    def vector(self, space: HypothesisSpace) -> np.ndarray:
        if self.kind == "uniform":
            return np.full(len(space), 1.0 / len(space))
        unknown = set(self.weights) - set(space.names)
        if unknown:
            raise ValueError(f"prior names not in space: {sorted(unknown)}")
        return np.array([float(self.weights.get(n, 0.0)) for n in space.names])


UNIFORM = Prior()


@dataclass(frozen=True)
class Posterior:
    probs: dict

    def __getitem__(self, name: str) -> float:
        return self.probs[name]

    def records(self):
        for name, p in self.probs.items():
            yield {"hypothesis": name, "probability": p}


@dataclass(frozen=True)
class GeneralizationJudgment:
    probability: float
    decision: str

    @classmethod
    def from_probability(cls, p: float) -> "GeneralizationJudgment":
        return cls(float(p), "yes" if p >= THRESHOLD else "no")


def likelihood(h: Hypothesis, elements: Sequence[Element]) -> float:
    """(1/|h|)^n if every element is in h, else 0."""
    elements = list(elements)
    if not elements:
        raise ValueError("likelihood needs at least one example")
    if all(e in h.extension for e in elements):
        return (1.0 / h.size) ** len(elements)
    return 0.0


def posterior_vector(space: HypothesisSpace, elements, prior: Prior = UNIFORM) -> np.ndarray:
    """Posterior over every hypothesis in declaration order (0 where incompatible)."""
    elements = list(elements)
    mask = space.compatible_mask(elements)
    if not mask.any():
        raise NoCompatibleHypothesis(f"no hypothesis contains {elements!r}")
    sizes = space.sizes.astype(float)
    weights = np.where(mask, sizes ** -len(elements), 0.0) * prior.vector(space)
    total = weights.sum()
    if total <= 0:
        raise DegeneratePrior("prior assigns zero mass to every compatible hypothesis")
    return weights / total


def posterior(space: HypothesisSpace, elements, prior: Prior = UNIFORM) -> Posterior:
    """Posterior restricted to the compatible hypotheses."""
    elements = list(elements)
    post = posterior_vector(space, elements, prior)
    mask = space.compatible_mask(elements)
    return Posterior({space.hypotheses[i].name: float(post[i]) for i in np.flatnonzero(mask)})


def generalization_probabilities(space: HypothesisSpace, elements, queries, prior: Prior = UNIFORM) -> np.ndarray:
    """p(y in C | X) for every query y."""
    post = posterior_vector(space, elements, prior)
    cols = space.indices(queries)
    if cols.size == 0:
        return np.zeros(0)
    p = post @ space.matrix[:, cols]
    return np.clip(p, 0.0, 1.0)


def generalize(space: HypothesisSpace, elements, y: Element, prior: Prior = UNIFORM) -> GeneralizationJudgment:
    p = generalization_probabilities(space, elements, [y], prior)[0]
    return GeneralizationJudgment.from_probability(p)


def bayes_prediction_grid(space: HypothesisSpace, elements, queries, prior: Prior = UNIFORM) -> list[GeneralizationJudgment]:
    probs = generalization_probabilities(space, elements, list(queries), prior)
    return [GeneralizationJudgment.from_probability(p) for p in probs]
