"""Command-line pipeline driver.

Subcommands: enrich, build-refbank, evaluate, build-evalset nomlex,
convert-evalset paraphrase, identify, export-vectors.  Exit codes: 0 on
success, 1 for input problems, 2 for internal failures.  Flag defaults can
be overridden with NOMARG_<NAME> environment variables.  All runs are
deterministic for fixed inputs; with ``--jobs`` the per-sentence work is
farmed out to processes and merged back in input order, so parallel and
serial outputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import evalkit
from .embedstore import load_embeddings
from .errors import NomargsError
from .identify import IdentifyConfig
from .labeling import DEFAULT_K, METHOD_KNN, METHOD_NEAREST_AVG, NOMLEX_TUNED_THRESHOLD, LabelerConfig
from .lexicon import load_lexicon
from .pipeline import assign_positional_ids, enrich_sentence
from .refbank import DEFAULT_SENTENCE_CAP, build_refbank, load_refbank, save_refbank
from .treebank import UDV2_TO_UDV1_RENAMES, load_conllu_file, save_conllu_file, serialize_conllu


class _Logger:
    def __init__(self, as_json: bool):
        self.as_json = as_json

    def __call__(self, event: str, **fields):
        if self.as_json:
            print(json.dumps({"event": event, **fields}, ensure_ascii=False), file=sys.stderr)
        else:
            rendered = " ".join(f"{k}={v}" for k, v in fields.items())
            print(f"nomargs: {event} {rendered}".rstrip(), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract wants 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _env(name: str, fallback, cast=str):
    raw = os.environ.get(f"NOMARG_{name}")
    if raw is None:
        return fallback
    return cast(raw)


def _renames(args):
    table = dict(UDV2_TO_UDV1_RENAMES) if getattr(args, "udv2", False) else {}
    path = getattr(args, "rename_table", None)
    if path:
        with open(path, encoding="utf-8") as handle:
            table.update(json.load(handle))
    return table or None


def _load_corpus(args, path=None):
    sentences = load_conllu_file(path or args.conllu, _renames(args))
    return assign_positional_ids(sentences)


def _write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def _labeler_config(args) -> LabelerConfig:
    return LabelerConfig(
        method=args.method, k=args.k, threshold=args.threshold, unique=not args.no_unique
    )


def _identify_config(args) -> IdentifyConfig:
    return IdentifyConfig(include_amod=not args.no_amod)


# Worker-process state for parallel enrich, loaded once per worker.
_WORKER: dict = {}


def _enrich_worker_init(lexicon_path, bank_path, embeddings_path, labeler_config, identify_config):
    _WORKER["lexicon"] = load_lexicon(lexicon_path)
    _WORKER["bank"] = load_refbank(bank_path)
    _WORKER["store"] = load_embeddings(embeddings_path)
    _WORKER["labeler"] = labeler_config
    _WORKER["identify"] = identify_config


def _enrich_worker(sentence):
    result = enrich_sentence(
        sentence,
        _WORKER["lexicon"],
        _WORKER["bank"],
        _WORKER["store"],
        _WORKER["labeler"],
        _WORKER["identify"],
    )
    return result.sentence, result.enrichment_rows()


def _cmd_enrich(args, log) -> int:
    sentences = _load_corpus(args)
    labeler_config = _labeler_config(args)
    identify_config = _identify_config(args)
    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1 and len(sentences) > 1:
        with ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_enrich_worker_init,
            initargs=(args.lexicon, args.bank, args.embeddings,
                      labeler_config, identify_config),
        ) as pool:
            outputs = list(pool.map(_enrich_worker, sentences, chunksize=8))
    else:
        _enrich_worker_init(
            args.lexicon, args.bank, args.embeddings, labeler_config, identify_config
        )
        outputs = [_enrich_worker(sentence) for sentence in sentences]
    enriched = [sentence for sentence, _ in outputs]
    rows = [row for _, sentence_rows in outputs for row in sentence_rows]
    if args.out:
        save_conllu_file(args.out, enriched)
    else:
        sys.stdout.write(serialize_conllu(enriched))
    if args.jsonl_out:
        _write_jsonl(args.jsonl_out, rows)
    log("enriched", sentences=len(sentences), instances=len(rows), jobs=jobs)
    return 0


def _cmd_build_refbank(args, log) -> int:
    corpus = _load_corpus(args)
    store = load_embeddings(args.embeddings)
    if args.verbs:
        verbs = {v.strip().lower() for v in args.verbs.split(",") if v.strip()}
    elif args.lexicon:
        verbs = load_lexicon(args.lexicon).verbs()
    else:
        raise NomargsError("build-refbank needs --verbs or --lexicon")
    bank = build_refbank(corpus, verbs, store, cap=args.cap)
    save_refbank(bank, args.out)
    for verb, stats in sorted(bank.stats().items()):
        log("bank-verb", verb=verb, **stats)
    log("bank-written", path=str(args.out), dim=bank.dim, arguments=len(bank))
    return 0


def _cmd_evaluate(args, log) -> int:
    gold = evalkit.read_gold_jsonl(args.gold)
    pred = evalkit.read_predictions(args.pred)
    identified = evalkit.read_candidate_sets(args.candidates) if args.candidates else None
    report = evalkit.per_relation_report(gold, pred, identified)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, ensure_ascii=False, indent=2)
            handle.write("\n")
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2)
          if args.json else report.to_text_table())
    return 0


def _split_outputs(args, instances, log) -> None:
    if not (args.tune_out or args.test_out):
        return
    if not (args.tune_out and args.test_out):
        raise NomargsError("--tune-out and --test-out must be given together")
    tune, test = evalkit.tune_test_split(
        instances, ratio=args.split_ratio, seed=args.seed
    )
    evalkit.write_gold_jsonl(tune, args.tune_out)
    evalkit.write_gold_jsonl(test, args.test_out)
    log("split", tune=len(tune), test=len(test), seed=args.seed, ratio=args.split_ratio)


def _cmd_build_evalset(args, log) -> int:
    corpus = _load_corpus(args)
    lexicon = load_lexicon(args.lexicon)
    for warning in lexicon.warnings:
        log("lexicon-warning", message=warning)
    instances = evalkit.build_nomlex_evalset(corpus, lexicon, per_verb_cap=args.per_verb_cap)
    evalkit.write_gold_jsonl(instances, args.out)
    _split_outputs(args, instances, log)
    log("evalset-written", path=str(args.out), instances=len(instances))
    return 0


def _cmd_convert_evalset(args, log) -> int:
    corpus = {s.sent_id: s for s in _load_corpus(args)}
    with open(args.records, encoding="utf-8") as handle:
        records = [json.loads(line) for line in handle if line.strip()]
    result = evalkit.convert_paraphrase_dataset(records, corpus)
    for index, reason in result.dropped:
        log("row-dropped", row=index, reason=reason)
    evalkit.write_gold_jsonl(result.instances, args.out)
    _split_outputs(args, result.instances, log)
    log(
        "evalset-written",
        path=str(args.out),
        instances=len(result.instances),
        dropped=len(result.dropped),
    )
    return 0


def _cmd_identify(args, log) -> int:
    from .identify import find_noun_instances, identify_candidates

    corpus = _load_corpus(args)
    lexicon = load_lexicon(args.lexicon)
    config = _identify_config(args)
    rows = []
    for sentence in corpus:
        for instance in find_noun_instances(sentence, lexicon):
            candidates = identify_candidates(instance, config)
            rows.append(
                {
                    "sent_id": sentence.sent_id,
                    "noun": instance.noun,
                    "verb": instance.verb_lemma,
                    "candidates": [
                        {"head": c.head, "relation": c.relation, "span": list(c.span)}
                        for c in candidates
                    ],
                }
            )
    if args.out:
        _write_jsonl(args.out, rows)
    else:
        for row in rows:
            print(json.dumps(row, ensure_ascii=False))
    log("identified", instances=len(rows))
    return 0


def _cmd_export_vectors(args, log) -> int:
    bank = load_refbank(args.bank)
    enriched = []
    if args.enriched:
        if not args.embeddings:
            raise NomargsError("--enriched needs --embeddings to fetch vectors")
        store = load_embeddings(args.embeddings)
        with open(args.enriched, encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                row = json.loads(line)
                for pair in row.get("pairs", ()):
                    vector = store.vector_for(row["sent_id"], int(pair["head"]))
                    enriched.append(
                        (
                            row.get("verb", ""),
                            pair["label"],
                            row["sent_id"],
                            int(pair["head"]),
                            [float(x) for x in vector],
                        )
                    )
    count = evalkit.export_argument_vectors(bank, enriched, args.out)
    log("vectors-exported", rows=count, path=str(args.out))
    return 0


def _add_corpus_flags(parser):
    parser.add_argument("--conllu", required=True, help="parsed corpus (CoNLL-U)")
    parser.add_argument("--udv2", action="store_true",
                        help="rename UDv2 relations (obj, obl:X) to the UDv1 inventory")
    parser.add_argument("--rename-table", default=None,
                        help="JSON file with extra relation renames applied at parse time")


def _add_split_flags(parser):
    parser.add_argument("--tune-out", default=None, help="write the tuning split here")
    parser.add_argument("--test-out", default=None, help="write the test split here")
    parser.add_argument("--split-ratio", type=float, default=_env("SPLIT_RATIO", 0.2, float))
    parser.add_argument("--seed", type=int, default=_env("SEED", 0, int))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nomargs", description=__doc__)
    parser.add_argument("--log-json", action="store_true",
                        default=bool(os.environ.get("NOMARG_LOG_JSON")),
                        help="emit line-delimited JSON logs on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enrich", help="label deverbal-noun arguments in a corpus")
    _add_corpus_flags(p)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--bank", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", default=None, help="enriched CoNLL-U (stdout when omitted)")
    p.add_argument("--jsonl-out", default=None, help="also write enrichment JSONL here")
    p.add_argument("--method", choices=(METHOD_KNN, METHOD_NEAREST_AVG),
                   default=_env("METHOD", METHOD_KNN))
    p.add_argument("--k", type=int, default=_env("K", DEFAULT_K, int))
    p.add_argument("--threshold", type=float,
                   default=_env("THRESHOLD", NOMLEX_TUNED_THRESHOLD, float))
    p.add_argument("--no-unique", action="store_true",
                   help="skip one-head-per-label conflict resolution")
    p.add_argument("--no-amod", action="store_true",
                   help="drop amod from the candidate relations")
    p.add_argument("--jobs", type=int, default=_env("JOBS", 0, int),
                   help="worker processes (default: all cores)")
    p.set_defaults(func=_cmd_enrich)

    p = sub.add_parser("build-refbank", help="collect verbal argument vectors per verb")
    _add_corpus_flags(p)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--lexicon", default=None, help="take target verbs from this lexicon")
    p.add_argument("--verbs", default=None, help="comma-separated verb lemmas")
    p.add_argument("--cap", type=int, default=_env("CAP", DEFAULT_SENTENCE_CAP, int),
                   help="max contributing sentences per verb")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_refbank)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--candidates", default=None,
                   help="identify output, enables the null-verdict row")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--json-out", default=None, help="also write the JSON report here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("build-evalset", help="derive gold data from lexicon patterns")
    p.add_argument("kind", choices=("nomlex",))
    _add_corpus_flags(p)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--per-verb-cap", type=int, default=_env("PER_VERB_CAP", 25, int))
    _add_split_flags(p)
    p.set_defaults(func=_cmd_build_evalset)

    p = sub.add_parser("convert-evalset", help="convert external annotation rows to gold data")
    p.add_argument("kind", choices=("paraphrase",))
    _add_corpus_flags(p)
    p.add_argument("--records", required=True, help="annotation rows (JSONL)")
    p.add_argument("--out", required=True)
    _add_split_flags(p)
    p.set_defaults(func=_cmd_convert_evalset)

    p = sub.add_parser("identify", help="list candidate arguments without labeling")
    _add_corpus_flags(p)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--no-amod", action="store_true")
    p.add_argument("--out", default=None, help="candidates JSONL (stdout when omitted)")
    p.set_defaults(func=_cmd_identify)

    p = sub.add_parser("export-vectors", help="dump bank (and enriched) vectors as JSONL")
    p.add_argument("--bank", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--enriched", default=None, help="enrichment JSONL to export as well")
    p.add_argument("--embeddings", default=None)
    p.set_defaults(func=_cmd_export_vectors)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    log = _Logger(args.log_json)
    try:
        return args.func(args, log)
    except (NomargsError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"nomargs: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything else is a bug, not an input problem
        print(f"nomargs: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
