"""Command-line pipeline: build-dataset, gen-prompts, respond, parse, score,
probe-knowledge, stats.

Exit codes: 0 success, 1 partial (some pairs failed or fell below the
coverage floor), 2 invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import prompts as P
from .datasets import (
    InputSetFormatError,
    bundled_city_quadruples,
    bundled_number_quadruples,
    dataset_stats,
    filter_ambiguous,
    human_majority,
    load_input_sets,
    load_quadruples,
    make_incremental_sets,
    query_list,
)
from .evaluation import PredictionGrid, ReportRow, aggregate, knowledge_f1, score_grid
from .hypotheses import CITY, DOMAINS, NUMBER, HypothesisSpace, HypothesisSpaceError, load_space
from .llm import ChatClient, LMEndpointConfig, LMError, collect
from .records import JsonlAppender, RecordFormatError, make_header, read_jsonl, write_csv, write_jsonl
from .responders import NO, YES, BayesResponder, Judgment, ResponseParser, always_yes, random_majority

log = logging.getLogger("coincidence")

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2

PROMPT_KINDS = {"zero-shot": P.ZERO_SHOT, "cot": P.COT, "knowledge": P.KNOWLEDGE}
RESPONDERS = ("bayes", "random", "always-yes", "llm", "human")
PROBE_RESPONDERS = ("oracle", "always-yes", "llm")


class InvalidInput(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines an output's content. Paths are excluded
    from the hash so that runs into different directories compare equal."""

    command: str
    domain: str
    prompt: str = "-"
    responder: str = "-"
    seed: int = 0
    query_sample: Optional[int] = None
    model: Optional[str] = None
    endpoint: Optional[str] = None
    prior: str = "uniform"

    def header(self, **extra) -> dict:
        cfg = asdict(self)
        if self.model:
            extra.setdefault("model", self.model)
        return make_header(cfg, domain=self.domain, prompt_kind=self.prompt, responder=self.responder, **extra)


# --- helpers -------------------------------------------------------------------

def _space(args) -> HypothesisSpace:
    return load_space(args.domain, args.space)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sets(args, space):
    if not args.sets:
        raise InvalidInput("--sets is required")
    return load_input_sets(args.sets, space)


def _queries(args, space):
    return query_list(space, args.query_sample, args.seed)


def _set_record(s, domain):
    return {"id": s.id, "domain": domain, "elements": list(s.elements), "source": s.source}


def _sort_key(set_order, query_order):
    return lambda r: (set_order.get(r["set_id"], len(set_order)), query_order.get(r["query"], len(query_order)), str(r["query"]))


def _write_stats(path, header, space, sets):
    stats = dataset_stats(space, sets)
    write_csv(path, header, ("size", "n_sets", "mean_candidates"), stats.rows())
    for row in stats.rows():
        print(f"size {row['size']}: {row['n_sets']} sets, {row['mean_candidates']:.2f} compatible hypotheses on average")


# --- subcommands ------------------------------------------------------------------

def cmd_build_dataset(args) -> int:
    space = _space(args)
    if args.quadruples:
        quads = load_quadruples(args.quadruples, space)
    else:
        quads = bundled_number_quadruples(space) if space.domain == NUMBER else bundled_city_quadruples(space)
    if not quads:
        log.warning("no quadruples found; writing empty outputs")
    raw = make_incremental_sets(quads)
    kept = filter_ambiguous(space, raw)
    cfg = RunConfig("build-dataset", args.domain, seed=args.seed)
    out = _out(args)
    header = cfg.header(n_quadruples=len(quads), n_raw=len(raw), n_retained=len(kept))
    write_jsonl(out / "sets.jsonl", header, (_set_record(s, space.domain) for s in kept))
    _write_stats(out / "stats.csv", header, space, kept)
    print(f"{len(quads)} quadruples -> {len(raw)} raw sets -> {len(kept)} retained")
    return EXIT_OK


def cmd_stats(args) -> int:
    space = _space(args)
    data = _sets(args, space)
    cfg = RunConfig("stats", args.domain, seed=args.seed)
    _write_stats(_out(args) / "stats.csv", cfg.header(), space, data.sets)
    return EXIT_OK


def cmd_gen_prompts(args) -> int:
    space = _space(args)
    data = _sets(args, space)
    kind = PROMPT_KINDS[args.prompt]
    queries = _queries(args, space)
    cfg = RunConfig("gen-prompts", args.domain, prompt=kind, seed=args.seed, query_sample=args.query_sample)
    recs = (P.render(kind, s.elements, q, space, s.id).record() for s in data.sets for q in queries)
    n = write_jsonl(_out(args) / f"prompts-{kind}.jsonl", cfg.header(queries=queries), recs)
    print(f"{n} prompts written")
    return EXIT_OK


def _judgment_file(out: Path, responder: str, kind: str, model: Optional[str]) -> Path:
    if responder == "llm":
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in model)
        return out / f"judgments-llm-{safe}-{kind}.jsonl"
    return out / f"judgments-{responder}.jsonl"


def _human_judgments(data):
    rows = [(sid, v.query, v.yes_count, v.no_count) for sid, votes in data.human.items() for v in votes]
    decisions, _ = human_majority(rows)
    return [Judgment("human", sid, q, d) for (sid, q), d in decisions.items()]


def cmd_respond(args) -> int:
    space = _space(args)
    data = _sets(args, space)
    responder = args.responder
    kind = PROMPT_KINDS[args.prompt] if responder == "llm" else "-"
    if responder == "llm" and not (args.endpoint and args.model):
        raise InvalidInput("--responder llm needs --endpoint and --model")
    queries = _queries(args, space)
    cfg = RunConfig(
        "respond", args.domain, prompt=kind, responder=responder, seed=args.seed, query_sample=args.query_sample,
        model=args.model if responder == "llm" else None, endpoint=args.endpoint if responder == "llm" else None,
    )
    header = cfg.header(queries=queries)
    out = _out(args)
    path = _judgment_file(out, responder, kind, args.model)

    existing: dict = {}
    if path.exists():
        old_header, old = read_jsonl(path)
        if old_header and old_header.get("config_hash") != header["config_hash"]:
            raise InvalidInput(f"{path} was produced by a different configuration; refusing to resume into it")
        existing = {(r["set_id"], r["query"]): r for r in old}
        if existing:
            log.info("resuming: %d pairs already present", len(existing))

    set_order = {s.id: i for i, s in enumerate(data.sets)}
    query_order = {q: i for i, q in enumerate(queries)}
    failures = []

    if responder == "human":
        new = [j.record() for j in _human_judgments(data) if j.key not in existing]
    else:
        todo = [(s, q) for s in data.sets for q in queries if (s.id, q) not in existing]
        if responder == "bayes":
            rsp = BayesResponder(space)
            wanted = {}
            for s, q in todo:
                wanted.setdefault(s.id, (s, []))[1].append(q)
            new = [j.record() for s, qs in wanted.values() for j in rsp.grid(s, qs)]
        elif responder == "random":
            new = [random_majority(s, q, args.seed).record() for s, q in todo]
        elif responder == "always-yes":
            new = [always_yes(s, q).record() for s, q in todo]
        else:
            new, failures = _respond_llm(args, space, kind, todo, path, header)

    merged = list(existing.values()) + new
    merged.sort(key=_sort_key(set_order, query_order))
    write_jsonl(path, header, merged)
    print(f"{len(new)} new judgments, {len(existing)} reused -> {path}")

    fail_path = out / "failures.jsonl"
    if failures:
        write_jsonl(fail_path, header, (f.record() for f in failures))
        print(f"{len(failures)} pairs failed; see {fail_path}", file=sys.stderr)
        return EXIT_PARTIAL
    if fail_path.exists():
        fail_path.unlink()
    return EXIT_OK


def _llm_config(args) -> LMEndpointConfig:
    return LMEndpointConfig(
        base_url=args.endpoint,
        model_name=args.model,
        api_key_env_var=args.key_env,
        max_concurrent_requests=args.max_concurrency,
    )


def _respond_llm(args, space, kind, todo, path, header):
    rendered = [P.render(kind, s.elements, q, space, s.id) for s, q in todo]
    new = []
    with ChatClient(_llm_config(args)) as client, JsonlAppender(path, header) as sink:
        def keep(result):
            if isinstance(result, Judgment):
                rec = result.record()
                sink.write(rec)
                new.append(rec)

        _, failures = collect(client, rendered, "llm", on_result=keep)
    return new, failures


def cmd_parse(args) -> int:
    header, recs = read_jsonl(args.judgments)
    parser = ResponseParser().extended(args.negative_phrase or ())
    changed = 0
    out_recs = []
    for r in recs:
        if r.get("raw_text") is not None:
            d = parser(r["raw_text"])
            changed += d != r["decision"]
            r = {**r, "decision": d}
        out_recs.append(r)
    header = dict(header, parser_negative_phrases=list(parser.negative_phrases))
    path = _out(args) / (Path(args.judgments).stem + "-parsed.jsonl")
    write_jsonl(path, header, out_recs)
    counts = {d: sum(r["decision"] == d for r in out_recs) for d in (YES, NO, "unparsed")}
    print(f"{len(out_recs)} judgments re-parsed ({changed} changed): {counts}")
    return EXIT_OK


def cmd_score(args) -> int:
    space = _space(args)
    data = _sets(args, space)
    rows, short_all = [], []
    for jpath in args.judgments:
        header, recs = read_jsonl(jpath)
        if header.get("domain", space.domain) != space.domain:
            raise InvalidInput(f"{jpath}: domain {header.get('domain')!r} does not match {space.domain!r}")
        judgments = [Judgment.from_record(r) for r in recs]
        name = header.get("responder") or (judgments[0].responder if judgments else "unknown")
        if header.get("responder") == "llm" and header.get("model"):
            name = f"llm:{header['model']}"
        queries = header.get("queries") or _queries(args, space)
        grid = PredictionGrid.from_judgments(judgments, space.domain, queries, header.get("prompt_kind", "-"), name)
        if args.unparsed_as_no:
            grid = grid.with_unparsed_as_no()
        sets = data.sets
        if name == "human":
            sets = [s for s in sets if s.id in data.human]
            for j in judgments:
                grid.per_set_queries.setdefault(j.set_id, []).append(j.query)
        scores, short = score_grid(space, sets, grid, args.coverage_floor)
        short_all += [(jpath, sid) for sid in short]
        rows += [r.record() for r in aggregate(scores, grid)]
    cfg = RunConfig("score", args.domain, seed=args.seed, query_sample=args.query_sample)
    header = cfg.header(unparsed="no" if args.unparsed_as_no else "skipped")
    path = _out(args) / "report.csv"
    write_csv(path, header, ReportRow.FIELDS, rows)
    for r in rows:
        print(f"{r['responder']:>12} {r['prompt_kind']:>9} size {r['input_size']}: "
              f"preferred {r['pct_smallest_preferred']:.3f} +/- {r['ci_half_width']:.3f}, "
              f"F1 {r['mean_f1_smallest']:.3f}, yes-rate {r['yes_rate']:.3f} (n={r['n_sets']})")
    if short_all:
        for jpath, sid in short_all:
            print(f"below coverage floor: {jpath} set {sid}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_probe_knowledge(args) -> int:
    space = _space(args)
    data = _sets(args, space) if args.sets else None
    sets = data.sets if data else []
    elements = _queries(args, space)
    table = P.load_probe_table(args.probes)
    names = [n for n in space.names if n in table]
    entity_prompts = [P.render_entity_probe(n, e, table) for n in names for e in elements]
    set_prompts = [P.render_set_probe(n, s.elements, table, s.id) for s in sets for n in names]

    failures = []
    if args.responder == "oracle":
        ent = {(p.set_id, p.query): YES if p.query in space.hypothesis(p.set_id).extension else NO for p in entity_prompts}
        st = {}
        by_id = {s.id: s for s in sets}
        for p in set_prompts:
            h = space.hypothesis(p.query)
            st[(p.query, p.set_id)] = YES if all(e in h.extension for e in by_id[p.set_id].elements) else NO
    elif args.responder == "always-yes":
        ent = {(p.set_id, p.query): YES for p in entity_prompts}
        st = {(p.query, p.set_id): YES for p in set_prompts}
    else:
        if not (args.endpoint and args.model):
            raise InvalidInput("--responder llm needs --endpoint and --model")
        with ChatClient(_llm_config(args)) as client:
            ej, f1_ = collect(client, entity_prompts, "llm")
            sj, f2_ = collect(client, set_prompts, "llm")
        failures = f1_ + f2_
        ent = {(j.set_id, j.query): j.decision for j in ej}
        st = {(j.query, j.set_id): j.decision for j in sj}

    scores = knowledge_f1(space, ent, st, sets)
    cfg = RunConfig("probe-knowledge", args.domain, responder=args.responder, seed=args.seed,
                    query_sample=args.query_sample, model=args.model if args.responder == "llm" else None)
    header = cfg.header()
    out = _out(args)
    recs = [{"kind": "entity", "hypothesis": h, "element": e, "decision": d} for (h, e), d in ent.items()]
    recs += [{"kind": "set", "hypothesis": h, "set_id": sid, "decision": d} for (h, sid), d in st.items()]
    write_jsonl(out / f"probes-{args.responder}.jsonl", header, recs)
    write_csv(out / f"knowledge-{args.responder}.csv", header, ("responder", "domain", "hypothesis_or_set", "f1"),
              scores.records(args.responder, space.domain))
    print(f"entity macro-F1 {scores.hypothesis_macro:.3f} (se {scores.hypothesis_se:.3f})")
    if st:
        print(f"set macro-F1 {scores.set_macro:.3f} (se {scores.set_se:.3f})")
    if scores.missing:
        print(f"missing probe coverage: {scores.missing}", file=sys.stderr)
    if failures:
        write_jsonl(out / "failures.jsonl", header, (f.record() for f in failures))
        return EXIT_PARTIAL
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coincidence", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, sets=True):
        p.add_argument("--domain", choices=DOMAINS, required=True)
        p.add_argument("--space", help="city attribute file (defaults to the bundled roster)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".")
        p.add_argument("--query-sample", type=int, default=None, help="seeded subsample of city queries")
        if sets:
            p.add_argument("--sets", help="input-set file (JSON lines)")

    def lm(p):
        p.add_argument("--endpoint", help="base URL of a chat-completions API")
        p.add_argument("--model")
        p.add_argument("--key-env", default="OPENAI_API_KEY", help="environment variable holding the API key")
        p.add_argument("--max-concurrency", type=int, default=4)

    p = sub.add_parser("build-dataset", help="expand quadruples into filtered input sets")
    common(p, sets=False)
    p.add_argument("--quadruples", help="quadruple file (defaults to the bundled data)")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("gen-prompts", help="render prompts for every (set, query) pair")
    common(p)
    p.add_argument("--prompt", choices=PROMPT_KINDS, default="zero-shot")
    p.set_defaults(func=cmd_gen_prompts)

    p = sub.add_parser("respond", help="collect judgments from one responder")
    common(p)
    p.add_argument("--responder", choices=RESPONDERS, required=True)
    p.add_argument("--prompt", choices=PROMPT_KINDS, default="zero-shot")
    lm(p)
    p.set_defaults(func=cmd_respond)

    p = sub.add_parser("parse", help="re-parse raw LM texts in a judgment file")
    p.add_argument("--judgments", required=True)
    p.add_argument("--negative-phrase", action="append", help="extra negative keyword (repeatable)")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("score", help="score judgment files into a report")
    common(p)
    p.add_argument("--judgments", nargs="+", required=True)
    p.add_argument("--coverage-floor", type=float, default=0.95)
    p.add_argument("--unparsed-as-no", action="store_true", help="count unparsed answers as no instead of skipping them")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("probe-knowledge", help="run knowledge probes and score them")
    common(p)
    p.add_argument("--responder", choices=PROBE_RESPONDERS, required=True)
    p.add_argument("--probes", help="probe template file (defaults to the bundled table)")
    lm(p)
    p.set_defaults(func=cmd_probe_knowledge)

    p = sub.add_parser("stats", help="per-size set counts and candidate-hypothesis means")
    common(p)
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidInput, InputSetFormatError, RecordFormatError, HypothesisSpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LMError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
