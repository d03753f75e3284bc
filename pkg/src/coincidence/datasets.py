"""Input-set construction, loading, filtering and statistics."""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .hypotheses import CITY, NUMBER, HypothesisSpace, InputSet, UnknownElement

log = logging.getLogger(__name__)


class DuplicateElement(ValueError):
    pass


class InputSetFormatError(ValueError):
    """Schema or value error in an input-set or quadruple file."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Quadruple:
    id: str
    elements: tuple

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if len(self.elements) != 4:
            raise ValueError(f"quadruple {self.id!r} needs exactly 4 elements")
        if len(set(self.elements)) != 4:
            raise DuplicateElement(f"quadruple {self.id!r} repeats an element")


@dataclass(frozen=True)
class HumanJudgment:
    query: object
    yes_count: int
    no_count: int


@dataclass
class Dataset:
    """Input sets plus optional per-pair human vote counts (keyed by set id)."""

    domain: str
    sets: list
    human: dict = field(default_factory=dict)


def make_incremental_sets(quadruples: Iterable[Quadruple], source: str = "generated") -> list[InputSet]:
    """[A,B,C,D] -> [A], [A,B], [A,B,C], [A,B,C,D]; ids are ``<quad id>-<k>``."""
    out = []
    for q in quadruples:
        if len(set(q.elements)) != len(q.elements):
            raise DuplicateElement(q.id)
        for k in range(1, 5):
            out.append(InputSet(f"{q.id}-{k}", q.elements[:k], source))
    return out


def filter_ambiguous(space: HypothesisSpace, sets: Iterable[InputSet]) -> list[InputSet]:
    """Keep sets compatible with at least two hypotheses."""
    kept = []
    n_zero = n_one = 0
    for s in sets:
        n = int(space.compatible_mask(s.elements).sum()) if all(e in space for e in s.elements) else 0
        if n >= 2:
            kept.append(s)
        elif n == 1:
            n_one += 1
        else:
            n_zero += 1
            log.info("dropping %s: no compatible hypothesis", s.id)
    if n_zero or n_one:
        log.info("filtered %d single-hypothesis and %d zero-hypothesis sets", n_one, n_zero)
    return kept


def _element(space: HypothesisSpace, raw, lineno: int):
    if space.domain == NUMBER:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise InputSetFormatError(lineno, f"number elements must be integers, got {raw!r}")
        if not 1 <= raw <= 100:
            raise InputSetFormatError(lineno, f"number {raw} outside 1..100")
        return raw
    if not isinstance(raw, str) or not raw:
        raise InputSetFormatError(lineno, f"city elements must be non-empty strings, got {raw!r}")
    if raw not in space:
        raise InputSetFormatError(lineno, f"unknown city {raw!r}")
    return raw


def _records(lines: Iterable[str]):
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputSetFormatError(lineno, f"invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise InputSetFormatError(lineno, "record must be a JSON object")
        if set(rec) == {"header"}:
            continue
        yield lineno, rec


def parse_input_sets(lines: Iterable[str], space: HypothesisSpace, default_source: str = "paper_data") -> Dataset:
    data = Dataset(space.domain, [])
    seen = set()
    for lineno, rec in _records(lines):
        for key in ("id", "domain", "elements"):
            if key not in rec:
                raise InputSetFormatError(lineno, f"missing field {key!r}")
        if rec["domain"] != space.domain:
            raise InputSetFormatError(lineno, f"domain {rec['domain']!r} does not match {space.domain!r}")
        sid = str(rec["id"])
        if sid in seen:
            raise InputSetFormatError(lineno, f"duplicate id {sid!r}")
        seen.add(sid)
        if not isinstance(rec["elements"], list):
            raise InputSetFormatError(lineno, "elements must be a list")
        elements = [_element(space, e, lineno) for e in rec["elements"]]
        try:
            data.sets.append(InputSet(sid, elements, rec.get("source", default_source)))
        except ValueError as exc:
            raise InputSetFormatError(lineno, str(exc)) from None
        votes = rec.get("human_judgments")
        if votes is not None:
            parsed = []
            for v in votes:
                try:
                    q = _element(space, v["query"], lineno)
                    yes, no = int(v["yes_count"]), int(v["no_count"])
                except (KeyError, TypeError, ValueError) as exc:
                    if isinstance(exc, InputSetFormatError):
                        raise
                    raise InputSetFormatError(lineno, f"bad human judgment {v!r}") from None
                if yes < 0 or no < 0 or yes + no == 0:
                    raise InputSetFormatError(lineno, f"human judgment for {q!r} needs positive counts")
                parsed.append(HumanJudgment(q, yes, no))
            data.human[sid] = parsed
    return data


def load_input_sets(path, space: HypothesisSpace) -> Dataset:
    """Read a JSON-lines input-set file.

    Each line: ``{"id", "domain", "elements": [...], "human_judgments"?: [{"query", "yes_count", "no_count"}]}``.
    """
    with open(path, encoding="utf-8") as fh:
        return parse_input_sets(fh, space)


def parse_quadruples(lines: Iterable[str], space: HypothesisSpace) -> list[Quadruple]:
    out, seen = [], set()
    for lineno, rec in _records(lines):
        if "id" not in rec or "elements" not in rec:
            raise InputSetFormatError(lineno, "quadruple needs 'id' and 'elements'")
        if not isinstance(rec["elements"], list):
            raise InputSetFormatError(lineno, "elements must be a list")
        elements = [_element(space, e, lineno) for e in rec["elements"]]
        qid = str(rec["id"])
        if qid in seen:
            raise InputSetFormatError(lineno, f"duplicate id {qid!r}")
        seen.add(qid)
        try:
            out.append(Quadruple(qid, elements))
        except ValueError as exc:
            raise InputSetFormatError(lineno, str(exc)) from None
    return out


def load_quadruples(path, space: HypothesisSpace) -> list[Quadruple]:
    with open(path, encoding="utf-8") as fh:
        return parse_quadruples(fh, space)


def _bundled_lines(name: str) -> list[str]:
    return resources.files("coincidence.data").joinpath(name).read_text(encoding="utf-8").splitlines()


def bundled_city_quadruples(space: HypothesisSpace) -> list[Quadruple]:
    return parse_quadruples(_bundled_lines("city_quadruples.jsonl"), space)


def bundled_number_quadruples(space: HypothesisSpace) -> list[Quadruple]:
    return parse_quadruples(_bundled_lines("number_quadruples.jsonl"), space)


def bundled_sets(space: HypothesisSpace) -> list[InputSet]:
    """Filtered desk-scale input sets for the space's domain."""
    quads = bundled_number_quadruples(space) if space.domain == NUMBER else bundled_city_quadruples(space)
    return filter_ambiguous(space, make_incremental_sets(quads))


def human_majority(rows: Iterable[tuple]) -> tuple[dict, int]:
    """Majority vote per (set_id, query) from ``(set_id, query, yes_count, no_count)`` rows.

    Exact ties resolve to yes. Returns the decisions and the number of ties.
    """
    totals: dict = defaultdict(lambda: [0, 0])
    for set_id, query, yes, no in rows:
        t = totals[(set_id, query)]
        t[0] += yes
        t[1] += no
    decisions, ties = {}, 0
    for key, (yes, no) in totals.items():
        if yes == no:
            ties += 1
        decisions[key] = "yes" if yes >= no else "no"
    if ties:
        log.info("human majority: %d tied pairs resolved to yes", ties)
    return decisions, ties


@dataclass(frozen=True)
class DatasetStats:
    sets_per_size: dict
    mean_candidates_per_size: dict

    def rows(self):
        for size in sorted(self.sets_per_size):
            yield {"size": size, "n_sets": self.sets_per_size[size], "mean_candidates": self.mean_candidates_per_size[size]}


def dataset_stats(space: HypothesisSpace, sets: Sequence[InputSet]) -> DatasetStats:
    counts: Counter = Counter()
    cands: dict[int, list[int]] = defaultdict(list)
    for s in sets:
        counts[len(s)] += 1
        cands[len(s)].append(int(space.compatible_mask(s.elements).sum()))
    return DatasetStats(
        {k: counts[k] for k in sorted(counts)},
        {k: float(np.mean(cands[k])) for k in sorted(cands)},
    )


def query_list(space: HypothesisSpace, sample: int | None = None, seed: int = 0) -> list:
    """Queries for a domain: 1..100 for numbers; the roster (optionally a seeded
    subsample kept in roster order) for cities."""
    if space.domain == NUMBER or not sample or sample >= len(space.roster):
        return list(space.roster)
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(space.roster), size=sample, replace=False))
    return [space.roster[i] for i in picked]
