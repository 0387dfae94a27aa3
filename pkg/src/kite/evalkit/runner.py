"""Metric-track runner: retrieve, generate, score all six metrics per item."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from kite.errors import KiteError
from kite.evalkit import metrics as m
from kite.evalkit.types import (
    METRIC_NAMES,
    METRIC_TRACK_CATEGORIES,
    EvalItem,
    MetricResult,
)
from kite.tutor import TutorEngine

DEFAULT_TOP_K = 5


def _evaluate_item(
    item: EvalItem,
    engine: TutorEngine,
    judge,
    embedder,
    top_k: int,
    n_questions: int,
) -> MetricResult:
    outcome = engine.ask(item.question, final_k=top_k)
    answer = outcome.response.answer
    contexts = [c.chunk.text for c in outcome.candidates]
    assert len(contexts) <= top_k

    fc = m.factual_correctness(answer, item.reference_answer, judge)
    sim = m.answer_similarity(answer, item.reference_answer, embedder)
    return MetricResult(
        item_id=item.item_id,
        faithfulness=m.faithfulness(answer, contexts, judge),
        answer_relevance=m.answer_relevance(item.question, answer, judge, embedder, n_questions),
        context_relevance=m.context_relevance(item.question, contexts, judge),
        answer_similarity=sim,
        factual_correctness=fc,
        answer_correctness=m.answer_correctness(fc, sim),
        n_contexts=len(contexts),
    )


def run_metric_track(
    items: list[EvalItem],
    engine: TutorEngine,
    judge,
    embedder,
    *,
    top_k: int = DEFAULT_TOP_K,
    n_questions: int = 3,
    max_workers: int = 1,
) -> tuple[list[MetricResult], dict]:
    """Evaluate every metric-track item; aggregate means and population stds.

    Items from other categories are skipped. Per-item failures are recorded in
    the summary and the run continues. Result order follows input order.
    """
    track_items = [i for i in items if i.category in METRIC_TRACK_CATEGORIES]
    results: list[MetricResult | None] = [None] * len(track_items)
    errors: dict[str, str] = {}

    def work(position: int) -> None:
        item = track_items[position]
        try:
            results[position] = _evaluate_item(item, engine, judge, embedder, top_k, n_questions)
        except KiteError as exc:
            errors[item.item_id] = f"{exc.code}: {exc}"

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            list(pool.map(work, range(len(track_items))))
    else:
        for position in range(len(track_items)):
            work(position)

    completed = [r for r in results if r is not None]
    summary = {
        "n_items": len(track_items),
        "n_completed": len(completed),
        "top_k": top_k,
        "metrics": {},
        "errors": errors,
    }
    for name in METRIC_NAMES:
        values = [r.value(name) for r in completed]
        defined = [v for v in values if v is not None]
        if defined:
            mean = sum(defined) / len(defined)
            std = math.sqrt(sum((v - mean) ** 2 for v in defined) / len(defined))
        else:
            mean = None
            std = None
        summary["metrics"][name] = {"mean": mean, "std": std, "n": len(defined)}
    return completed, summary


def save_metric_outputs(
    results: list[MetricResult],
    summary: dict,
    out_dir: str | Path,
) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_item = out / "metrics.jsonl"
    with open(per_item, "w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps(result.to_record(), ensure_ascii=False) + "\n")
    summary_path = out / "metrics_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, ensure_ascii=False), encoding="utf-8")
    return per_item, summary_path
