"""Command line interface.

Subcommands: ingest | index | ask | serve | eval {metrics, simulate, rubric}.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from kite.errors import KiteError
from kite.index import DEFAULT_DIM, build_index_bundle, load_index, save_index
from kite.ingest import (
    ChunkingConfig,
    SourceClass,
    chunk_document,
    clean_pages,
    extract_pages,
    read_corpus,
    slugify,
    write_corpus,
)
from kite.providers import HttpEmbedder, MockEmbedder, MockGenerator, MockJudge, MockReranker, MockStudent
from kite.retrieve import RetrievalConfig
from kite.tutor import TutorEngine


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); the contract is 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="kite", description="Retrieval-grounded tutoring engine")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_ingest = sub.add_parser("ingest", help="chunk a directory of course documents")
    p_ingest.add_argument("directory")
    p_ingest.add_argument("--source-class", choices=["official", "supplementary"], default="official")
    p_ingest.add_argument("--out", default="corpus.jsonl")
    p_ingest.add_argument("--target-chars", type=int, default=500)
    p_ingest.add_argument("--overlap-chars", type=int, default=100)
    p_ingest.add_argument("--hard-cap-chars", type=int, default=1000)

    p_index = sub.add_parser("index", help="embed a corpus and build the index directory")
    p_index.add_argument("corpus")
    p_index.add_argument("--out", default="indexdir")
    p_index.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p_index.add_argument("--provider", default="mock", help="embedding provider: mock or http")
    p_index.add_argument("--endpoint", default="")
    p_index.add_argument("--model", default="")
    p_index.add_argument("--api-key-env", default=None)
    p_index.add_argument("--seed", type=int, default=0)

    p_ask = sub.add_parser("ask", help="one-shot question against an index")
    p_ask.add_argument("query")
    p_ask.add_argument("--index", required=True)
    p_ask.add_argument("--mock-providers", action="store_true", default=True,
                       help="use deterministic offline providers (default)")
    p_ask.add_argument("--final-k", type=int, default=None)
    p_ask.add_argument("--explain", action="store_true", help="print the per-stage score table")
    p_ask.add_argument("--json", action="store_true", help="machine-readable output")

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--config", default=None, help="config path (or KITE_CONFIG)")

    p_eval = sub.add_parser("eval", help="evaluation harness")
    eval_sub = p_eval.add_subparsers(dest="eval_command", metavar="track")

    p_metrics = eval_sub.add_parser("metrics", help="reference-based metric track")
    p_metrics.add_argument("--dataset", required=True)
    p_metrics.add_argument("--index", required=True)
    p_metrics.add_argument("--top-k", type=int, default=5)
    p_metrics.add_argument("--out", default="eval_out")
    p_metrics.add_argument("--json", action="store_true")

    p_sim = eval_sub.add_parser("simulate", help="two-round simulated-student track")
    p_sim.add_argument("--dataset", required=True)
    p_sim.add_argument("--index", required=True)
    p_sim.add_argument("--student-provider", default="mock")
    p_sim.add_argument("--top-k", type=int, default=None)
    p_sim.add_argument("--out", default="triples.jsonl")
    p_sim.add_argument("--json", action="store_true")

    p_rubric = eval_sub.add_parser("rubric", help="expert rubric report")
    p_rubric.add_argument("--records", required=True)
    p_rubric.add_argument("--out", default=None)
    p_rubric.add_argument("--json", action="store_true")

    return parser


def _mock_engine(index_dir: str, final_k: int | None = None) -> TutorEngine:
    bundle = load_index(index_dir)
    retrieval = RetrievalConfig()
    embedder = MockEmbedder(dim=bundle.dim or 64)
    return TutorEngine(
        bundle,
        generator=MockGenerator(),
        embedder=embedder,
        reranker=MockReranker(),
        retrieval=retrieval,
    )


def _cmd_ingest(args) -> int:
    root = Path(args.directory)
    if not root.is_dir():
        raise KiteError(f"not a directory: {root}", code="io")
    cfg = ChunkingConfig(
        target_chars=args.target_chars,
        overlap_chars=args.overlap_chars,
        hard_cap_chars=args.hard_cap_chars,
    )
    source = SourceClass(args.source_class)
    chunks = []
    files = sorted(p for p in root.rglob("*") if p.suffix.lower() in (".txt", ".md"))
    for path in files:
        doc_id = slugify(str(path.relative_to(root).with_suffix("")))
        raw = extract_pages(path, source, doc_id=doc_id)
        chunks.extend(chunk_document(clean_pages(raw), cfg))
    write_corpus(chunks, args.out)
    print(f"wrote {len(chunks)} chunks from {len(files)} files to {args.out}")
    return 0


def _cmd_index(args) -> int:
    chunks = read_corpus(args.corpus)
    if args.provider == "mock":
        embedder = MockEmbedder(dim=args.dim, seed=args.seed)
    elif args.provider == "http":
        if not args.endpoint:
            raise UsageError("--provider http requires --endpoint")
        embedder = HttpEmbedder(
            endpoint=args.endpoint, model=args.model, api_key_env=args.api_key_env, dim=args.dim
        )
    else:
        raise UsageError(f"unknown provider: {args.provider}")
    bundle = build_index_bundle(chunks, embedder, dim=args.dim)
    save_index(bundle, args.out)
    print(f"indexed {bundle.count} chunks (dim {bundle.dim}) into {args.out}")
    return 0


def _cmd_ask(args) -> int:
    engine = _mock_engine(args.index)
    outcome = engine.ask(args.query, final_k=args.final_k)
    if args.json:
        payload = outcome.response.to_dict()
        payload["routing"] = outcome.routing
        payload["retrieval"] = [c.provenance() for c in outcome.candidates]
        print(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        print(json.dumps(outcome.response.to_dict(), indent=2, ensure_ascii=False))
    if args.explain:
        print("\nstage scores (final ranking):")
        header = f"{'chunk_id':<24} {'dense':>8} {'bm25':>8} {'hybrid':>8} {'mmr':>8} {'rerank':>8} {'boosted':>8}"
        print(header)
        for c in outcome.candidates:
            print(
                f"{c.chunk.chunk_id:<24} {c.dense_score:>8.4f} {c.bm25_norm:>8.4f} "
                f"{c.hybrid_score:>8.4f} {(c.mmr_score or 0):>8.4f} "
                f"{(c.rerank_score or 0):>8.4f} {(c.boosted_score or 0):>8.4f}"
            )
        trace = outcome.trace
        print(
            f"\nstage sizes: dense={len(trace.dense_ids)} mmr={len(trace.mmr_ids)} "
            f"final={len(trace.final_ids)}"
        )
    return 0


def _cmd_serve(args) -> int:
    import os

    from kite.service import AppConfig, serve

    config_path = args.config or os.environ.get("KITE_CONFIG")
    if not config_path:
        raise UsageError("serve requires --config or KITE_CONFIG")
    serve(AppConfig.load(config_path))
    return 0


def _cmd_eval_metrics(args) -> int:
    from kite.evalkit import load_eval_items, run_metric_track, save_metric_outputs

    items = load_eval_items(args.dataset)
    engine = _mock_engine(args.index)
    results, summary = run_metric_track(
        items, engine, MockJudge(), engine.embedder, top_k=args.top_k
    )
    per_item, summary_path = save_metric_outputs(results, summary, args.out)
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(f"evaluated {summary['n_completed']}/{summary['n_items']} items (top_k={args.top_k})")
        for name, row in summary["metrics"].items():
            mean = "NA" if row["mean"] is None else f"{row['mean']:.4f}"
            std = "NA" if row["std"] is None else f"{row['std']:.4f}"
            print(f"  {name:<22} mean={mean} std={std} n={row['n']}")
        print(f"wrote {per_item} and {summary_path}")
    return 0


def _cmd_eval_simulate(args) -> int:
    from kite.evalkit import load_eval_items, save_triples, simulate_student

    if args.student_provider != "mock":
        raise UsageError("only the mock student provider is wired into the CLI")
    items = load_eval_items(args.dataset)
    engine = _mock_engine(args.index)
    triples, errors = simulate_student(items, MockStudent(), engine, top_k=args.top_k)
    save_triples(triples, args.out)
    if args.json:
        print(json.dumps({"triples": len(triples), "errors": errors}, indent=2))
    else:
        print(f"wrote {len(triples)} triples to {args.out}; {len(errors)} item errors")
    return 0


def _cmd_eval_rubric(args) -> int:
    from kite.evalkit import load_rubric_csv, rubric_report

    report = rubric_report(load_rubric_csv(args.records))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2), encoding="utf-8")
    if args.json or not args.out:
        print(json.dumps(report, indent=2))
    else:
        print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "index":
            return _cmd_index(args)
        if args.command == "ask":
            return _cmd_ask(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "eval":
            if args.eval_command == "metrics":
                return _cmd_eval_metrics(args)
            if args.eval_command == "simulate":
                return _cmd_eval_simulate(args)
            if args.eval_command == "rubric":
                return _cmd_eval_rubric(args)
            parser.print_usage(sys.stderr)
            return 1
        parser.print_usage(sys.stderr)
        return 1
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except KiteError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
