"""Finite domains and extensional hypotheses.

Every hypothesis is stored as a row of a boolean membership matrix over the
roster, so the number game and the city game share one representation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

Element = Union[int, str]

NUMBER = "number"
CITY = "city"
DOMAINS = (NUMBER, CITY)

CITY_HYPOTHESES = (
    "east", "west", "north", "south", "tropical", "temperate",
    "africa", "asia", "europe", "north_america", "oceania", "south_america",
    "pop10m_plus", "developed", "developing", "least_developed",
    "capital", "nfl",
)


class HypothesisSpaceError(ValueError):
    """Malformed roster or attribute file."""


class NoCompatibleHypothesis(LookupError):
    """No hypothesis contains every element of the input set."""


class UnknownElement(KeyError):
    """An element is not part of the roster."""


@dataclass(frozen=True)
class Hypothesis:
    name: str
    extension: frozenset

    def __post_init__(self):
        if not self.extension:
            raise HypothesisSpaceError(f"hypothesis {self.name!r} has an empty extension")

    @property
    def size(self) -> int:
        return len(self.extension)

    def __contains__(self, element) -> bool:
        return element in self.extension


@dataclass(frozen=True)
class InputSet:
    """An ordered list of 1 to 4 distinct example elements."""

    id: str
    elements: tuple
    source: str = "generated"

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not 1 <= len(self.elements) <= 4:
            raise ValueError(f"input set {self.id!r} must hold 1-4 elements, got {len(self.elements)}")
        if len(set(self.elements)) != len(self.elements):
            raise ValueError(f"input set {self.id!r} has repeated elements")
        if len({type(e) for e in self.elements}) != 1:
            raise ValueError(f"input set {self.id!r} mixes element types")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


@dataclass(frozen=True, eq=False)
class HypothesisSpace:
    """A roster plus named hypotheses, materialized as a membership matrix.

    ``matrix[i, j]`` is True iff roster element ``j`` belongs to hypothesis ``i``.
    """

    domain: str
    roster: tuple
    hypotheses: tuple
    matrix: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_hypotheses(cls, domain, roster, hypotheses, metadata=None):
        if domain not in DOMAINS:
            raise HypothesisSpaceError(f"unknown domain {domain!r}")
        roster = tuple(roster)
        hypotheses = tuple(hypotheses)
        if len(set(roster)) != len(roster):
            raise HypothesisSpaceError("roster elements must be unique")
        names = [h.name for h in hypotheses]
        if len(set(names)) != len(names):
            raise HypothesisSpaceError("hypothesis names must be unique")
        index = {e: j for j, e in enumerate(roster)}
        matrix = np.zeros((len(hypotheses), len(roster)), dtype=bool)
        for i, h in enumerate(hypotheses):
            missing = h.extension - index.keys()
            if missing:
                raise HypothesisSpaceError(
                    f"hypothesis {h.name!r} has elements outside the roster: {sorted(map(str, missing))[:5]}"
                )
            matrix[i, [index[e] for e in h.extension]] = True
        matrix.setflags(write=False)
        return cls(domain, roster, hypotheses, matrix, dict(metadata or {}))

    def __post_init__(self):
        object.__setattr__(self, "_index", {e: j for j, e in enumerate(self.roster)})
        object.__setattr__(self, "_by_name", {h.name: i for i, h in enumerate(self.hypotheses)})

    def __len__(self) -> int:
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)

    @property
    def names(self) -> list[str]:
        return [h.name for h in self.hypotheses]

    @property
    def sizes(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def hypothesis(self, name: str) -> Hypothesis:
        try:
            return self.hypotheses[self._by_name[name]]
        except KeyError:
            raise KeyError(f"no hypothesis named {name!r}") from None

    def position(self, name: str) -> int:
        return self._by_name[name]

    def __contains__(self, element) -> bool:
        return element in self._index

    def indices(self, elements: Iterable[Element]) -> np.ndarray:
        """Roster column indices of ``elements``; raises UnknownElement."""
        out = []
        for e in elements:
            try:
                out.append(self._index[e])
            except KeyError:
                raise UnknownElement(e) from None
        return np.asarray(out, dtype=np.intp)

    def compatible_mask(self, elements: Iterable[Element]) -> np.ndarray:
        cols = self.indices(elements)
        return self.matrix[:, cols].all(axis=1)

    def coerce(self, value) -> Element:
        """Parse a raw (possibly string) value into a roster element."""
        if self.domain == NUMBER:
            try:
                value = int(value)
            except (TypeError, ValueError):
                raise UnknownElement(value) from None
        if value not in self._index:
            raise UnknownElement(value)
        return value

    def records(self):
        """Audit stream: one ``{name, size, extension}`` dict per hypothesis."""
        for h, row in zip(self.hypotheses, self.matrix):
            yield {
                "name": h.name,
                "size": int(row.sum()),
                "extension": [self.roster[j] for j in np.flatnonzero(row)],
            }


def compatible(space: HypothesisSpace, elements: Iterable[Element]) -> list[Hypothesis]:
    """All hypotheses whose extension contains every element, in declaration order."""
    elements = list(elements)
    if any(e not in space for e in elements):
        return []
    mask = space.compatible_mask(elements)
    return [space.hypotheses[i] for i in np.flatnonzero(mask)]


def smallest(space: HypothesisSpace, elements: Iterable[Element]) -> Hypothesis:
    """The compatible hypothesis of minimal size; ties go to the least name."""
    candidates = compatible(space, elements)
    if not candidates:
        raise NoCompatibleHypothesis(f"no hypothesis contains {list(elements)!r}")
    return min(candidates, key=lambda h: (h.size, h.name))


def membership_vector(h: Hypothesis, queries: Sequence[Element]) -> np.ndarray:
    """Binary vector: position i is 1 iff ``queries[i]`` is in ``h``."""
    return np.fromiter((q in h.extension for q in queries), dtype=np.int8, count=len(queries))


# --- number game ----------------------------------------------------------

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n ** 0.5) + 1))


def _powers(base: int, limit: int = 100) -> set[int]:
    out, p = set(), 1
    while p <= limit:
        out.add(p)
        p *= base
    return out


def build_number_space() -> HypothesisSpace:
    """The 33 number-game hypotheses over 1..100.

    Power hypotheses include 1 (the zeroth power), as do square and cube.
    """
    roster = range(1, 101)
    rules: list[tuple[str, set[int]]] = [
        ("odd", {n for n in roster if n % 2}),
        ("even", {n for n in roster if n % 2 == 0}),
        ("square", {k * k for k in range(1, 11)}),
        ("cube", {k ** 3 for k in range(1, 5)}),
        ("prime", {n for n in roster if _is_prime(n)}),
    ]
    rules += [(f"end{d}", {n for n in roster if n % 10 == d}) for d in range(10)]
    rules += [(f"div{d}", {n for n in roster if n % d == 0}) for d in (3, 4, 5, 6, 7, 8, 9, 11, 12)]
    rules += [(f"pow{b}", _powers(b)) for b in range(2, 11)]
    hypotheses = [Hypothesis(name, frozenset(ext)) for name, ext in rules]
    return HypothesisSpace.from_hypotheses(NUMBER, roster, hypotheses)


# --- city game ------------------------------------------------------------

def _read_commented_csv(text: str):
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep and " " not in key.strip():
                meta[key.strip()] = value.strip()
            continue
        if line.strip():
            body.append(line)
    return meta, list(csv.reader(io.StringIO("\n".join(body))))


def _parse_flag(value: str, city: str, column: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "y"):
        return True
    if v in ("0", "false", "no", "n", ""):
        return False
    raise HypothesisSpaceError(f"city {city!r}: column {column!r} is not boolean: {value!r}")


def parse_city_space(text: str) -> HypothesisSpace:
    meta, rows = _read_commented_csv(text)
    if not rows:
        raise HypothesisSpaceError("attribute file has no header row")
    header = [c.strip() for c in rows[0]]
    if not header or header[0] != "name":
        raise HypothesisSpaceError("first column must be 'name'")
    columns = header[1:]
    unknown = [c for c in columns if c not in CITY_HYPOTHESES]
    if unknown:
        raise HypothesisSpaceError(f"unknown hypothesis columns: {unknown}")
    missing = [c for c in CITY_HYPOTHESES if c not in columns]
    if missing:
        raise HypothesisSpaceError(f"missing hypothesis columns: {missing}")
    if len(set(columns)) != len(columns):
        raise HypothesisSpaceError("duplicate hypothesis columns")

    roster: list[str] = []
    members = {c: set() for c in CITY_HYPOTHESES}
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise HypothesisSpaceError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
        name = row[0].strip()
        if not name:
            raise HypothesisSpaceError(f"row {lineno}: empty city name")
        if name in seen:
            raise HypothesisSpaceError(f"row {lineno}: duplicate city {name!r}")
        seen.add(name)
        flags = {c: _parse_flag(v, name, c) for c, v in zip(columns, row[1:])}
        if not any(flags.values()):
            raise HypothesisSpaceError(f"city {name!r} belongs to no hypothesis")
        roster.append(name)
        for c, on in flags.items():
            if on:
                members[c].add(name)

    hypotheses = [Hypothesis(c, frozenset(members[c])) for c in CITY_HYPOTHESES]
    return HypothesisSpace.from_hypotheses(CITY, roster, hypotheses, metadata=meta)


def load_city_space(attribute_file: Union[str, Path, None] = None) -> HypothesisSpace:
    """Load the city space from an attribute file (the bundled roster by default)."""
    if attribute_file is None:
        text = resources.files("coincidence.data").joinpath("cities.csv").read_text(encoding="utf-8")
    else:
        text = Path(attribute_file).read_text(encoding="utf-8")
    return parse_city_space(text)


def load_space(domain: str, attribute_file=None) -> HypothesisSpace:
    if domain == NUMBER:
        return build_number_space()
    if domain == CITY:
        return load_city_space(attribute_file)
    raise ValueError(f"unknown domain {domain!r}")
