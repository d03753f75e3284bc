"""Judgment producers and the keyword response parser."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import bayes
from .hypotheses import Element, HypothesisSpace, InputSet

YES, NO, UNPARSED = "yes", "no", "unparsed"
DECISIONS = (YES, NO, UNPARSED)

RANDOM_DRAWS = 30


@dataclass(frozen=True)
class Judgment:
    responder: str
    set_id: str
    query: Element
    decision: str
    raw_text: Optional[str] = None
    attempts: int = 1

    def __post_init__(self):
        if self.decision not in DECISIONS:
            raise ValueError(f"bad decision {self.decision!r}")

    @property
    def key(self):
        return (self.set_id, self.query)

    def record(self) -> dict:
        rec = {"responder": self.responder, "set_id": self.set_id, "query": self.query, "decision": self.decision}
        if self.raw_text is not None:
            rec["raw_text"] = self.raw_text
        rec["attempts"] = self.attempts
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Judgment":
        return cls(rec["responder"], rec["set_id"], rec["query"], rec["decision"], rec.get("raw_text"), rec.get("attempts", 1))


def always_yes(input_set: InputSet, query: Element) -> Judgment:
    return Judgment("always-yes", input_set.id, query, YES)


def _pair_key(seed: int, set_id: str, query: Element) -> int:
    digest = hashlib.blake2b(f"{seed}\x1f{set_id}\x1f{query}".encode(), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def random_majority(input_set: InputSet, query: Element, seed: int = 0) -> Judgment:
    """Majority of 30 fair coin flips; a 15-15 split counts as yes.

    Flips come from a Philox stream keyed on (seed, set id, query), so the
    result does not depend on evaluation order.
    """
    rng = np.random.Generator(np.random.Philox(key=_pair_key(seed, input_set.id, query)))
    yes_votes = int(rng.integers(0, 2, size=RANDOM_DRAWS).sum())
    return Judgment("random", input_set.id, query, YES if 2 * yes_votes >= RANDOM_DRAWS else NO)


class BayesResponder:
    """Thresholded size-principle learner (yes iff p(y in C | X) >= 0.5)."""

    name = "bayes"

    def __init__(self, space: HypothesisSpace, prior: bayes.Prior = bayes.UNIFORM):
        self.space = space
        self.prior = prior

    def __call__(self, input_set: InputSet, query: Element) -> Judgment:
        j = bayes.generalize(self.space, input_set.elements, query, self.prior)
        return Judgment(self.name, input_set.id, query, j.decision)

    def grid(self, input_set: InputSet, queries) -> list[Judgment]:
        probs = bayes.generalization_probabilities(self.space, input_set.elements, list(queries), self.prior)
        return [
            Judgment(self.name, input_set.id, q, YES if p >= bayes.THRESHOLD else NO)
            for q, p in zip(queries, probs)
        ]


def bayes_responder(space: HypothesisSpace, prior: bayes.Prior = bayes.UNIFORM) -> BayesResponder:
    return BayesResponder(space, prior)


# --- response parsing ---------------------------------------------------------

YES_PHRASES = (
    "yes",
    "i think it will also produce",
    "i think the program will also produce",
    "i predict that it will also produce",
)
NEGATIVE_PHRASES = ("no", "unlikely", "impossible to predict")


def _contains(text: str, phrase: str) -> bool:
    # single words match on word boundaries so that "no" does not fire inside "know"
    if " " in phrase:
        return phrase in text
    return re.search(rf"\b{re.escape(phrase)}\b", text) is not None


@dataclass(frozen=True)
class ResponseParser:
    """Keyword classifier for free-text answers.

    Yes-keywords are checked first. "likely" counts as yes only when
    "unlikely" is absent.
    """

    negative_phrases: tuple = field(default=NEGATIVE_PHRASES)

    def __call__(self, raw_text: Optional[str]) -> str:
        if raw_text is None:
            return UNPARSED
        text = raw_text.lower()
        if "yes" in text:
            return YES
        if "likely" in text and "unlikely" not in text:
            return YES
        if any(p in text for p in YES_PHRASES[1:]):
            return YES
        if any(_contains(text, p) for p in self.negative_phrases):
            return NO
        return UNPARSED

    def extended(self, extra: Iterable[str]) -> "ResponseParser":
        extra = tuple(p.lower() for p in extra if p.strip())
        return ResponseParser(self.negative_phrases + extra)


_DEFAULT_PARSER = ResponseParser()


def parse_response(raw_text: Optional[str]) -> str:
    return _DEFAULT_PARSER(raw_text)
