"""Command-line entry point.

Subcommands: index, search, sweep, report, gen-synth. Each accepts
--config FILE with flat key=value lines; explicit flags beat the file,
the file beats built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

from .analysis import AnalyzerConfig, load_stopwords
from .index import (CorpusError, IndexFormatError, build_index, load_index,
                    save_index)
from .prf import (PrfParams, association_matrix, expand_query, sample_top,
                  trace_expansion)
from .retrieval import Query, search, trec_run_lines
from .report import (ReportError, aggregate, load_sweep_results, render_csv,
                     render_markdown)
from .sweep import SweepConfig, run_sweep
from .synth import SynthParams, generate

log = logging.getLogger(__name__)


def _parse_range(text: str) -> tuple[int, int]:
    if ":" in text:
        lo, hi = text.split(":", 1)
    else:
        lo = hi = text
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected LO:HI or a single integer, got {text!r}") from None


def _parse_prf(text: str) -> PrfParams:
    try:
        d, t = text.split(",", 1)
        return PrfParams(int(d), int(t))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected D,T with both >= 1 (for example 5,2), "
            f"got {text!r}") from None


def _analyzer_from_args(args) -> AnalyzerConfig:
    stopwords = frozenset()
    if args.stopwords:
        stopwords = load_stopwords(args.stopwords)
    return AnalyzerConfig(
        lowercase=not args.no_lowercase,
        unicode_normalization="nfkc" if args.nfkc else "none",
        arabic_folding=args.fold_arabic,
        stopwords=stopwords,
        min_token_length=args.min_token_length,
    )


def cmd_index(args) -> int:
    config = _analyzer_from_args(args)
    try:
        index = build_index(args.corpus_dir, config)
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    save_index(index, args.out_index)
    total_tokens = sum(doc.length for doc in index.docs)
    digest = hashlib.sha256(Path(args.out_index).read_bytes()).hexdigest()
    print(f"documents: {index.doc_count}")
    print(f"tokens: {total_tokens}")
    print(f"distinct terms: {len(index.terms)}")
    if index.read_errors:
        print(f"skipped files: {len(index.read_errors)}")
        for external_id, message in index.read_errors:
            print(f"  {external_id}: {message}", file=sys.stderr)
    print(f"index: {args.out_index} sha256={digest}")
    return 0


def cmd_search(args) -> int:
    try:
        index = load_index(args.index)
    except (OSError, IndexFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    query = Query.from_text(args.qid, args.query, index.config)
    ranked = search(index, query, args.k)
    if args.prf and not ranked:
        print("# no initial results: query proceeds unexpanded",
              file=sys.stderr)
    if args.prf and ranked:
        d, t = args.prf.d, args.prf.t
        feedback = sample_top(ranked, d)
        matrix = association_matrix(index, feedback, row_terms=query.terms)
        expanded = expand_query(query, matrix, t)
        trace = trace_expansion(index, query, feedback, matrix, t)
        print(f"# query {query.query_id}: {' '.join(query.terms)}",
              file=sys.stderr)
        print(f"# feedback docs (D={d}): {' '.join(trace.feedback_docs)}",
              file=sys.stderr)
        for term, members in trace.clusters:
            body = " ".join(f"{v}:{s}" for v, s in members) or "(none)"
            print(f"#   {term} -> {body}", file=sys.stderr)
        print(f"# added terms (T={t}): "
              f"{' '.join(trace.added_terms) or '(none)'}", file=sys.stderr)
        print(f"# expanded query: {' '.join(expanded.terms)}", file=sys.stderr)
        if expanded.terms != query.terms:
            ranked = search(index, expanded, args.k)
    for line in trec_run_lines(query.query_id, ranked, index, tag=args.tag):
        print(line)
    return 0


def cmd_sweep(args) -> int:
    config = SweepConfig(
        index_path=args.index,
        queries_path=args.queries,
        qrels_path=args.qrels,
        out_dir=args.out_dir,
        d_range=args.d_range,
        t_range=args.t_range,
        k=args.k,
        workers=args.workers,
        resume=args.resume,
        trace=args.trace,
    )
    total = len(config.cells())
    done = 0

    def progress(d: int, t: int, error: str) -> None:
        nonlocal done
        done += 1
        status = f"failed: {error}" if error else "ok"
        print(f"cell D={d:02d} T={t:02d} {status} ({done}/{total})")

    try:
        outcome = run_sweep(config, progress=progress)
    except (OSError, IndexFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{outcome.executed} cells executed, {outcome.skipped} skipped, "
          f"{len(outcome.failures)} failed")
    return 0 if outcome.ok else 1


def cmd_report(args) -> int:
    try:
        results = load_sweep_results(args.sweep_dir)
        report = aggregate(results)
    except (OSError, ReportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    written = []
    if args.format in ("csv", "both"):
        written += render_csv(report, args.out_dir)
    if args.format in ("markdown", "both"):
        written.append(render_markdown(report, args.out_dir))
    if not args.no_figures:
        from .figures import render_report_figures
        written += render_report_figures(report, args.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_gen_synth(args) -> int:
    params = SynthParams(
        n_docs=args.docs,
        n_queries=args.queries,
        n_planted=args.planted,
        n_dominance=args.dominance,
        vocab_size=args.vocab,
        doc_len=args.doc_len,
        seed=args.seed,
    )
    summary = generate(args.out_dir, params)
    print(f"corpus: {summary.corpus_dir} ({summary.n_docs} documents)")
    print(f"queries: {summary.queries_path} ({summary.n_queries})")
    print(f"qrels: {summary.qrels_path}")
    print(f"planted queries: {summary.planted_path} "
          f"({' '.join(summary.planted_qids)})")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="prfsweep",
        description="Retrieval engine with blind-feedback query expansion "
                    "and a (D, T) grid evaluation harness.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress details to stderr")
    subparsers = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def sub(name: str, func, help_text: str):
        p = subparsers.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="FILE",
                       help="flat key=value file supplying flag defaults")
        p.set_defaults(func=func)
        registry[name] = p
        return p

    p = sub("index", cmd_index, "build and persist an inverted index")
    p.add_argument("corpus_dir", help="directory tree of UTF-8 .txt files")
    p.add_argument("out_index", help="output index file")
    p.add_argument("--no-lowercase", action="store_true",
                   help="keep original letter case")
    p.add_argument("--nfkc", action="store_true",
                   help="apply Unicode compatibility normalization")
    p.add_argument("--fold-arabic", action="store_true",
                   help="apply light Arabic orthographic folding")
    p.add_argument("--stopwords", metavar="FILE",
                   help="stopword list, one token per line")
    p.add_argument("--min-token-length", type=int, default=1)

    p = sub("search", cmd_search, "rank documents for one query")
    p.add_argument("index", help="index file built by `prfsweep index`")
    p.add_argument("query", help="query text")
    p.add_argument("--k", type=int, default=10, help="results to return")
    p.add_argument("--prf", type=_parse_prf, metavar="D,T",
                   help="expand the query from the top D documents with T "
                        "terms per query term before the final run")
    p.add_argument("--qid", default="q0", help="query id for the run output")
    p.add_argument("--tag", default="prfsweep", help="run tag column")

    p = sub("sweep", cmd_sweep, "run the full (D, T) grid experiment")
    p.add_argument("index")
    p.add_argument("queries", help="TSV file: qid<TAB>query text")
    p.add_argument("qrels", help="TREC qrels file")
    p.add_argument("out_dir")
    p.add_argument("--d-range", type=_parse_range, default=(1, 20),
                   metavar="LO:HI")
    p.add_argument("--t-range", type=_parse_range, default=(1, 20),
                   metavar="LO:HI")
    p.add_argument("--k", type=int, default=1000, help="retrieval depth")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true",
                   help="skip cells whose run file already exists")
    p.add_argument("--trace", action="store_true",
                   help="write per-cell expansion trace files")

    p = sub("report", cmd_report, "aggregate a sweep into the analysis tables")
    p.add_argument("sweep_dir", help="directory written by `prfsweep sweep`")
    p.add_argument("out_dir")
    p.add_argument("--format", choices=["csv", "markdown", "both"],
                   default="both")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering figures")

    p = sub("gen-synth", cmd_gen_synth,
            "generate a synthetic corpus with planted expansion structure")
    p.add_argument("out_dir")
    p.add_argument("--docs", type=int, default=2000)
    p.add_argument("--queries", type=int, default=50)
    p.add_argument("--planted", type=int, default=12,
                   help="queries with a guaranteed-improvement plant")
    p.add_argument("--dominance", type=int, default=6,
                   help="queries planted for strict curve improvement")
    p.add_argument("--vocab", type=int, default=4000)
    p.add_argument("--doc-len", type=_parse_range, default=(90, 130),
                   metavar="LO:HI")
    p.add_argument("--seed", type=int, default=7)

    return parser, registry


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _apply_config_file(argv: list[str], registry: dict) -> None:
    command = next((a for a in argv if not a.startswith("-")), None)
    if command not in registry:
        return
    config_path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif arg.startswith("--config="):
            config_path = arg.split("=", 1)[1]
    if config_path is None:
        return
    values = _read_config_file(config_path)
    parser = registry[command]
    actions = {action.dest: action for action in parser._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise ValueError(f"unknown option {key!r} in config file "
                             f"{config_path}")
        if isinstance(action, (argparse._StoreTrueAction,
                               argparse._StoreFalseAction)):
            lowered = raw.lower()
            if lowered in _TRUE:
                defaults[key] = isinstance(action, argparse._StoreTrueAction)
            elif lowered in _FALSE:
                defaults[key] = not isinstance(action, argparse._StoreTrueAction)
            else:
                raise ValueError(f"option {key!r} in {config_path} must be a "
                                 f"boolean, got {raw!r}")
        elif action.type is not None:
            defaults[key] = action.type(raw)
        else:
            defaults[key] = raw
    parser.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        _apply_config_file(argv, registry)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
