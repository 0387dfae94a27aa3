"""Run the whole evaluation harness offline: metric track, simulated-student
track, and a rubric report over a synthetic fixture.

    python3 scripts/run_eval_demo.py [outdir]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from kite.evalkit import (
    Category,
    EvalItem,
    RubricLabel,
    RubricRecord,
    Transition,
    rubric_report,
    run_metric_track,
    save_metric_outputs,
    save_triples,
    simulate_student,
)
from kite.evalkit.types import RUBRIC_CRITERIA
from kite.index import build_index_bundle
from kite.ingest import chunk_document, clean_pages
from kite.providers import MockEmbedder, MockGenerator, MockJudge, MockReranker, MockStudent
from kite.tutor import TutorEngine

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from synth import make_course_doc, make_eval_items  # noqa: E402


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("eval_demo_out")
    out.mkdir(parents=True, exist_ok=True)

    chunks = []
    for i in range(6):
        chunks.extend(chunk_document(clean_pages(make_course_doc(i))))
    embedder = MockEmbedder(dim=48, seed=7)
    bundle = build_index_bundle(chunks, embedder, dim=48)
    engine = TutorEngine(
        bundle, generator=MockGenerator(), embedder=embedder, reranker=MockReranker()
    )

    items = make_eval_items(10, 8, 4)

    results, summary = run_metric_track(items, engine, MockJudge(), embedder, top_k=5)
    save_metric_outputs(results, summary, out)
    print(f"metric track: {summary['n_completed']}/{summary['n_items']} items")
    for name, row in summary["metrics"].items():
        print(f"  {name:<22} mean={row['mean']:.4f} std={row['std']:.4f} n={row['n']}")

    triples, errors = simulate_student(items, MockStudent(), engine)
    save_triples(triples, out / "triples.jsonl")
    print(f"simulated student: {len(triples)} triples, {len(errors)} errors")

    transitions = (
        [Transition.PARTIAL_TO_CORRECT] * 4
        + [Transition.ALREADY_CORRECT] * 2
        + [Transition.INCORRECT_TO_PARTIAL] * 2
    )
    records = [
        RubricRecord(
            item_id=t.item_id,
            rater_id=rater,
            labels={c: RubricLabel.YES for c in RUBRIC_CRITERIA},
            transition=transitions[i % len(transitions)],
        )
        for i, t in enumerate(triples)
        for rater in ("r1", "r2")
    ]
    report = rubric_report(records)
    (out / "rubric_summary.json").write_text(json.dumps(report, indent=2))
    rate = report["improvement_rate"]
    print(f"rubric: improvement rate {rate:.2%}, raw agreement {report['agreement']['raw_agreement']:.2%}")
    print(f"outputs in {out}/")


if __name__ == "__main__":
    main()
