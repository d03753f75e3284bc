"""Prompt rendering: zero-shot, chain-of-thought, knowledge, and probes.

All renderers are pure. Apostrophes in "Let’s" are U+2019 throughout.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .hypotheses import CITY, NUMBER, Element, Hypothesis, HypothesisSpace, UnknownElement

ZERO_SHOT = "zero_shot"
COT = "cot"
KNOWLEDGE = "knowledge"
KINDS = (ZERO_SHOT, COT, KNOWLEDGE)

_INSTRUCTION = 'Please only provide a "yes" or "no" without outputting anything else.'

_NUMBER_COT_DEMOS = (
    "Q: There is a computer program that produces integers between 0 and 100. "
    "Let’s say that it produced the following values: 36, 21, 75, 84. "
    "Do you think it will also produce 24?\n\n"
    "A: Yes, because the program seems to be producing integers that are "
    "divisible by 3, and 24 is divisible by 3.\n\n"
    "Q: There is a computer program that produces integers between 0 and 100. "
    "Let’s say it produced the following values: 3, 17, 25, 39. "
    "Do you think it will also produce 24?\n\n"
    "A: No, because the program seems to be producing odd integers, and 24 is not odd.\n\n"
)

_CITY_COT_DEMOS = (
    "Q: There is a computer program that produces cities. "
    "Let’s say it produced the following cities: Paris, Nairobi, Lima, Canberra. "
    "Do you think it will also produce Ottawa?\n\n"
    "A: Yes, because the computer program appears to be generating national "
    "capitals, and Ottawa is a national capital.\n\n"
    "Q: There is a computer program that produces cities. "
    "Let’s say it produced the following cities: Beijing, Riyadh, Karachi, Phnom Penh. "
    "Do you think it will also produce Madrid?\n\n"
    "A: No, because the computer program appears to be generating cities in Asia, "
    "and Madrid is in Europe.\n\n"
    "Q: There is a computer program that produces cities. "
    "Let’s say it produced the following cities: Houston, Adelaide, Paris, Busan. "
    "Do you think it will also produce Dhaka?\n\n"
    "A: No, because the computer program appears to be generating cities in "
    "developed countries, and Dhaka is in Bangladesh, which is not a developed country.\n\n"
)


class MissingProbeTemplate(KeyError):
    """No probe phrasing exists for a hypothesis."""


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    set_id: str
    query: Element
    kind: str

    def record(self) -> dict:
        return {"set_id": self.set_id, "query": self.query, "kind": self.kind, "text": self.text}


def _domain_of(elements: Sequence[Element]) -> str:
    return NUMBER if isinstance(elements[0], (int, np.integer)) else CITY


def _serialize(elements: Sequence[Element]) -> str:
    return ", ".join(str(e) for e in elements)


def join_clauses(items: Sequence[str]) -> str:
    """'a', 'a and b', 'a, b, and c'."""
    items = list(items)
    if not items:
        raise ValueError("nothing to join")
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


def _check(elements, set_id):
    elements = list(elements)
    if not elements:
        raise ValueError("input set must be non-empty")
    return elements, set_id if set_id is not None else _serialize(elements)


def render_zero_shot(elements, query, set_id=None, *, answer_cue: bool = True) -> RenderedPrompt:
    elements, set_id = _check(elements, set_id)
    noun = "integers (up to 100)" if _domain_of(elements) == NUMBER else "cities"
    text = (
        f"There is a computer program that produces {noun}. "
        f"Let’s say it produced the following values: {_serialize(elements)}. "
        f"Question: Do you think it will also produce {query}?"
    )
    if answer_cue:
        text += " Answer:"
    return RenderedPrompt(text, set_id, query, ZERO_SHOT)


def render_cot(elements, query, set_id=None, *, answer_cue: bool = True) -> RenderedPrompt:
    elements, set_id = _check(elements, set_id)
    if _domain_of(elements) == NUMBER:
        demos = _NUMBER_COT_DEMOS
        question = (
            "Q: There is a computer program that produces integers between 0 and 100. "
            f"Let’s say it produced the following values: {_serialize(elements)}. "
        )
    else:
        demos = _CITY_COT_DEMOS
        question = (
            "Q: There is a computer program that produces cities. "
            f"Let’s say it produced the following cities: {_serialize(elements)}. "
        )
    text = demos + question + f"Do you think it will also produce {query}?"
    if answer_cue:
        text += "\n\nA:"
    return RenderedPrompt(text, set_id, query, COT)


# --- knowledge sentences ----------------------------------------------------

def _number_clauses(names: set[str]) -> list[str]:
    clauses = []
    for parity in ("even", "odd"):
        if parity in names:
            clauses.append(parity)
    for name, phrase in (("square", "a perfect square"), ("cube", "a perfect cube"), ("prime", "a prime number")):
        if name in names:
            clauses.append(phrase)
    clauses += [f"ends with {d}" for d in range(10) if f"end{d}" in names]
    divisors = [str(d) for d in (3, 4, 5, 6, 7, 8, 9, 11, 12) if f"div{d}" in names]
    if divisors:
        clauses.append(f"is divisible by {join_clauses(divisors)}")
    bases = [str(b) for b in range(2, 11) if f"pow{b}" in names]
    if bases:
        clauses.append(f"is a power of {join_clauses(bases)}")
    return clauses


_CONTINENTS = {
    "africa": "Africa", "asia": "Asia", "europe": "Europe",
    "north_america": "North America", "oceania": "Oceania", "south_america": "South America",
}


def _city_clauses(names: set[str]) -> list[str]:
    clauses = []
    hemis = [label for key, label in (("east", "Eastern"), ("west", "Western"), ("north", "Northern"), ("south", "Southern")) if key in names]
    if len(hemis) == 1:
        clauses.append(f"is in the {hemis[0]} Hemisphere")
    elif hemis:
        clauses.append(f"is in the {join_clauses(hemis)} Hemispheres")
    bands = [b for b in ("tropical", "temperate") if b in names]
    if bands:
        clauses.append(f"is located within {join_clauses(bands)} latitudes")
    clauses += [f"is in {label}" for key, label in _CONTINENTS.items() if key in names]
    if "pop10m_plus" in names:
        clauses.append("has at least ten million people")
    for key, label in (("developed", "a developed"), ("developing", "a developing"), ("least_developed", "a least-developed")):
        if key in names:
            clauses.append(f"is in {label} country")
    if "capital" in names:
        clauses.append("is a capital city")
    if "nfl" in names:
        clauses.append("hosts an NFL team")
    return clauses


def attribute_sentence(space: HypothesisSpace, element: Element) -> str:
    """One sentence listing every hypothesis ``element`` belongs to."""
    if element not in space:
        raise UnknownElement(element)
    col = space.indices([element])[0]
    names = {space.names[i] for i in np.flatnonzero(space.matrix[:, col])}
    if not names:
        raise UnknownElement(element)
    if space.domain == NUMBER:
        clauses = _number_clauses(names)
        return f"{element} is {join_clauses(clauses)}."
    return f"{element} {join_clauses(_city_clauses(names))}."


def render_knowledge(elements, query, space: HypothesisSpace, set_id=None) -> RenderedPrompt:
    elements, set_id = _check(elements, set_id)
    sentences = [attribute_sentence(space, e) for e in elements]
    sentences.append(attribute_sentence(space, query))
    if space.domain == NUMBER:
        task = (
            "There is a computer program that produces integers (up to 100). "
            f"Let’s say it produced the following values: {_serialize(elements)}. "
        )
    else:
        task = (
            "There is a computer program that produces cities. "
            f"Let’s say it produced the following cities: {_serialize(elements)}. "
        )
    text = " ".join(sentences) + " " + task + f"Do you think it will also produce {query}? " + _INSTRUCTION
    return RenderedPrompt(text, set_id, query, KNOWLEDGE)


def render(kind: str, elements, query, space: HypothesisSpace, set_id=None, *, answer_cue: bool = True) -> RenderedPrompt:
    if kind == ZERO_SHOT:
        return render_zero_shot(elements, query, set_id, answer_cue=answer_cue)
    if kind == COT:
        return render_cot(elements, query, set_id, answer_cue=answer_cue)
    if kind == KNOWLEDGE:
        return render_knowledge(elements, query, space, set_id)
    raise ValueError(f"unknown prompt kind {kind!r}")


# --- knowledge probes ---------------------------------------------------------

@dataclass(frozen=True)
class ProbeTemplate:
    hypothesis_name: str
    entity_probe_template: str
    set_probe_template: str


def parse_probe_table(text: str) -> dict[str, ProbeTemplate]:
    reader = csv.DictReader(io.StringIO(text))
    required = {"hypothesis_name", "entity_probe_template", "set_probe_template"}
    if not reader.fieldnames or not required <= set(reader.fieldnames):
        raise ValueError(f"probe table needs columns {sorted(required)}")
    table = {}
    for row in reader:
        t = ProbeTemplate(row["hypothesis_name"], row["entity_probe_template"], row["set_probe_template"])
        if "{e}" not in t.entity_probe_template or "{set}" not in t.set_probe_template:
            raise ValueError(f"probe templates for {t.hypothesis_name!r} lack a placeholder")
        table[t.hypothesis_name] = t
    return table


def load_probe_table(path=None) -> dict[str, ProbeTemplate]:
    if path is None:
        text = resources.files("coincidence.data").joinpath("probes.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_probe_table(text)


_DEFAULT_PROBES: dict[str, ProbeTemplate] | None = None


def _template(h, table: Mapping[str, ProbeTemplate] | None) -> ProbeTemplate:
    global _DEFAULT_PROBES
    if table is None:
        if _DEFAULT_PROBES is None:
            _DEFAULT_PROBES = load_probe_table()
        table = _DEFAULT_PROBES
    name = h.name if isinstance(h, Hypothesis) else h
    try:
        return table[name]
    except KeyError:
        raise MissingProbeTemplate(name) from None


def render_entity_probe(h, element, table=None) -> RenderedPrompt:
    """Probe one element's membership, e.g. "Is 2 an even number?"."""
    t = _template(h, table)
    return RenderedPrompt(t.entity_probe_template.replace("{e}", str(element)), t.hypothesis_name, element, "entity_probe")


def render_set_probe(h, elements, table=None, set_id=None) -> RenderedPrompt:
    elements = list(elements)
    if not elements:
        raise ValueError("set probe needs at least one element")
    t = _template(h, table)
    text = t.set_probe_template.replace("{set}", f"[{_serialize(elements)}]")
    return RenderedPrompt(text, set_id if set_id is not None else _serialize(elements), t.hypothesis_name, "set_probe")
