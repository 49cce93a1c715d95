"""Command line for the embedding sidecar.

``encode`` runs a masked language model over pre-tokenized sentences;
``encode-static`` copies vectors from a pretrained word-vector table.
Input is request JSONL ({"sent_id", "tokens"}) or a CoNLL-U file; output
is NAVF binary or embeddings JSONL.
"""

from __future__ import annotations

import argparse
import sys

from .encoder import (
    SkipBudgetExceeded,
    encode_corpus,
    encode_static,
    read_requests,
    requests_from_conllu,
)
from .formats import FORMAT_NAVF, FORMATS


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_io_flags(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--requests", help="request JSONL ({'sent_id','tokens'} rows)")
    source.add_argument("--conllu", help="derive requests from a CoNLL-U file")
    parser.add_argument("--out", required=True)
    parser.add_argument("--format", choices=FORMATS, default=FORMAT_NAVF)
    parser.add_argument("--errors", default=None,
                        help="write skipped-request report here (JSONL)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nomargs-embed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="contextual vectors from a masked LM")
    _add_io_flags(p)
    p.add_argument("--model", required=True, help="model id or local path")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--device", default="cpu")
    p.add_argument("--layer", type=int, default=-1,
                   help="hidden layer to read (default: final)")

    p = sub.add_parser("encode-static", help="vectors copied from a static table")
    _add_io_flags(p)
    p.add_argument("--table", required=True, help="word-vector text table")
    return parser


def _load_requests(args):
    if args.requests:
        return read_requests(args.requests)
    return requests_from_conllu(args.conllu)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        requests = _load_requests(args)
        if args.command == "encode":
            summary = encode_corpus(
                requests,
                model_id=args.model,
                output_path=args.out,
                fmt=args.format,
                batch_size=args.batch_size,
                device=args.device,
                layer=args.layer,
                error_path=args.errors,
            )
        else:
            summary = encode_static(
                requests,
                table_path=args.table,
                output_path=args.out,
                fmt=args.format,
                error_path=args.errors,
            )
    except SkipBudgetExceeded as exc:
        print(f"nomargs-embed: aborted: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"nomargs-embed: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"nomargs-embed: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(
        f"nomargs-embed: wrote {summary.records} record(s), "
        f"skipped {len(summary.skipped)}",
        file=sys.stderr,
    )
    return 0


def main() -> None:
    sys.exit(run())
