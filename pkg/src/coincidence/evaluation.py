"""Sensitivity metrics: F1 against hypotheses, smallest-hypothesis preference,
yes-rates, and knowledge-probe F1, grouped by input-set size."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .hypotheses import Element, HypothesisSpace, InputSet, compatible, membership_vector, smallest
from .responders import NO, UNPARSED, YES, Judgment

log = logging.getLogger(__name__)

Z95 = 1.959963984540054


class LengthMismatch(ValueError):
    pass


class MissingJudgments(LookupError):
    pass


def f1(pred, truth) -> float:
    """F1 with truth=1 as the positive class.

    Both vectors empty scores 1.0; exactly one empty scores 0.0.
    """
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"{pred.shape} vs {truth.shape}")
    n_pred, n_true = int(pred.sum()), int(truth.sum())
    if n_pred == 0 and n_true == 0:
        log.debug("degenerate F1: both vectors empty")
        return 1.0
    tp = int((pred & truth).sum())
    if tp == 0:
        return 0.0
    return 2.0 * tp / (n_pred + n_true)


@dataclass
class PredictionGrid:
    """Judgments of one responder, keyed by (set_id, query)."""

    responder: str
    domain: str
    queries: list
    prompt_kind: str = "-"
    decisions: dict = field(default_factory=dict)
    per_set_queries: dict = field(default_factory=dict)

    @classmethod
    def from_judgments(cls, judgments: Iterable[Judgment], domain: str, queries, prompt_kind: str = "-", responder=None):
        judgments = list(judgments)
        name = responder or (judgments[0].responder if judgments else "unknown")
        grid = cls(name, domain, list(queries), prompt_kind)
        for j in judgments:
            grid.decisions[j.key] = j.decision
        return grid

    def with_unparsed_as_no(self) -> "PredictionGrid":
        """Copy in which unparsed judgments count as no instead of being skipped."""
        decisions = {k: (NO if d == UNPARSED else d) for k, d in self.decisions.items()}
        return PredictionGrid(self.responder, self.domain, self.queries, self.prompt_kind, decisions,
                              dict(self.per_set_queries))

    def queries_for(self, set_id: str) -> list:
        """Query list of one set; sets without their own list use the shared one."""
        return self.per_set_queries.get(set_id, self.queries)

    def decision(self, set_id: str, query) -> str | None:
        return self.decisions.get((set_id, query))

    def counts(self, set_ids=None) -> tuple[int, int, int]:
        wanted = None if set_ids is None else set(set_ids)
        yes = no = unparsed = 0
        for (sid, _), d in self.decisions.items():
            if wanted is not None and sid not in wanted:
                continue
            if d == YES:
                yes += 1
            elif d == NO:
                no += 1
            else:
                unparsed += 1
        return yes, no, unparsed


@dataclass(frozen=True)
class SetScore:
    set_id: str
    size: int
    f1_by_hypothesis: dict
    smallest_name: str
    smallest_f1: float
    preferred_smallest: bool
    n_scored: int


def yes_rate(grid: PredictionGrid, set_ids=None) -> float:
    """yes / (yes + no); unparsed judgments are left out."""
    yes, no, _ = grid.counts(set_ids)
    if yes + no == 0:
        return math.nan
    return yes / (yes + no)


def score_set(space: HypothesisSpace, input_set: InputSet, grid: PredictionGrid,
              coverage_floor: float = 0.95) -> SetScore:
    queries = grid.queries_for(input_set.id)
    decisions = [grid.decision(input_set.id, q) for q in queries]
    keep = [i for i, d in enumerate(decisions) if d in (YES, NO)]
    coverage = len(keep) / len(queries) if queries else 0.0
    if coverage < coverage_floor:
        raise MissingJudgments(
            f"set {input_set.id}: {len(keep)}/{len(queries)} parsed judgments, below floor {coverage_floor:.0%}"
        )
    kept_queries = [queries[i] for i in keep]
    pred = np.array([decisions[i] == YES for i in keep], dtype=bool)

    candidates = compatible(space, input_set.elements)
    target = smallest(space, input_set.elements)
    scores = {h.name: f1(pred, membership_vector(h, kept_queries)) for h in candidates}
    best_other = max((v for k, v in scores.items() if k != target.name), default=-math.inf)
    return SetScore(
        set_id=input_set.id,
        size=len(input_set),
        f1_by_hypothesis=scores,
        smallest_name=target.name,
        smallest_f1=scores[target.name],
        preferred_smallest=scores[target.name] > best_other,
        n_scored=len(keep),
    )


def _mean_ci(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    if arr.size < 2:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(Z95 * arr.std(ddof=1) / math.sqrt(arr.size))


@dataclass(frozen=True)
class ReportRow:
    responder: str
    prompt_kind: str
    domain: str
    input_size: int
    n_sets: int
    pct_smallest_preferred: float
    ci_half_width: float
    mean_f1_smallest: float
    f1_ci_half_width: float
    yes_rate: float

    FIELDS = (
        "responder", "prompt_kind", "domain", "input_size", "n_sets", "pct_smallest_preferred",
        "ci_half_width", "mean_f1_smallest", "f1_ci_half_width", "yes_rate",
    )

    def record(self) -> dict:
        return {f: getattr(self, f) for f in self.FIELDS}


def aggregate(scores: Iterable[SetScore], grid: PredictionGrid) -> list[ReportRow]:
    """One row per input size (1-4), ordered by size."""
    buckets: dict[int, list[SetScore]] = defaultdict(list)
    for s in sorted(scores, key=lambda s: s.set_id):
        buckets[s.size].append(s)
    rows = []
    for size in sorted(buckets):
        bucket = buckets[size]
        pref, pref_ci = _mean_ci([float(s.preferred_smallest) for s in bucket])
        mf1, f1_ci = _mean_ci([s.smallest_f1 for s in bucket])
        rows.append(ReportRow(
            responder=grid.responder,
            prompt_kind=grid.prompt_kind,
            domain=grid.domain,
            input_size=size,
            n_sets=len(bucket),
            pct_smallest_preferred=pref,
            ci_half_width=pref_ci,
            mean_f1_smallest=mf1,
            f1_ci_half_width=f1_ci,
            yes_rate=yes_rate(grid, [s.set_id for s in bucket]),
        ))
    return rows


def score_grid(space: HypothesisSpace, sets: Sequence[InputSet], grid: PredictionGrid,
               coverage_floor: float = 0.95) -> tuple[list[SetScore], list[str]]:
    """Score every set; returns the scores and the ids that fell below the coverage floor."""
    scores, short = [], []
    for s in sets:
        try:
            scores.append(score_set(space, s, grid, coverage_floor))
        except MissingJudgments as exc:
            log.warning("%s", exc)
            short.append(s.id)
    return scores, short


# --- knowledge probes -----------------------------------------------------------

@dataclass(frozen=True)
class KnowledgeScores:
    per_hypothesis: dict
    per_set: dict
    hypothesis_macro: float
    hypothesis_se: float
    set_macro: float
    set_se: float
    missing: dict

    def records(self, responder: str, domain: str):
        for name, v in self.per_hypothesis.items():
            yield {"responder": responder, "domain": domain, "hypothesis_or_set": name, "f1": v}
        for sid, v in self.per_set.items():
            yield {"responder": responder, "domain": domain, "hypothesis_or_set": f"set:{sid}", "f1": v}


def _macro(values) -> tuple[float, float]:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), se


def knowledge_f1(space: HypothesisSpace,
                 entity_answers: Mapping[tuple[str, Element], str],
                 set_answers: Mapping[tuple[str, str], str] | None = None,
                 sets: Sequence[InputSet] = ()) -> KnowledgeScores:
    """F1 of probe answers against ground truth.

    ``entity_answers`` maps (hypothesis, element) to a decision and is scored
    per hypothesis over the probed elements. ``set_answers`` maps
    (hypothesis, set_id) to a decision and is scored per input set over the
    probed hypotheses, truth being "every element is a member". Unparsed
    answers are skipped; hypotheses with no usable answers are listed in
    ``missing`` with the number of unanswered probes.
    """
    set_answers = set_answers or {}
    by_id = {s.id: s for s in sets}

    per_h: dict[str, tuple[list, list]] = defaultdict(lambda: ([], []))
    missing: dict[str, int] = defaultdict(int)
    for (name, element), decision in entity_answers.items():
        h = space.hypothesis(name)
        if decision not in (YES, NO):
            missing[name] += 1
            continue
        pred, truth = per_h[name]
        pred.append(decision == YES)
        truth.append(element in h.extension)
    per_hypothesis = {n: f1(*per_h[n]) for n in space.names if n in per_h}
    for n in space.names:
        if n not in per_h and any(k[0] == n for k in entity_answers):
            missing.setdefault(n, 0)

    per_s: dict[str, tuple[list, list]] = defaultdict(lambda: ([], []))
    for (name, sid), decision in set_answers.items():
        if decision not in (YES, NO):
            missing[f"set:{sid}"] += 1
            continue
        h = space.hypothesis(name)
        pred, truth = per_s[sid]
        pred.append(decision == YES)
        truth.append(all(e in h.extension for e in by_id[sid].elements))
    per_set = {sid: f1(*per_s[sid]) for sid in sorted(per_s)}

    hm, hse = _macro(per_hypothesis.values())
    sm, sse = _macro(per_set.values())
    return KnowledgeScores(per_hypothesis, per_set, hm, hse, sm, sse, dict(missing))
