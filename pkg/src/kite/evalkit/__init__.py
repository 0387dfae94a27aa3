"""Evaluation harness: reference-based metrics, simulated-student protocol,
rubric reporting, and inter-rater agreement."""

from kite.evalkit.metrics import (
    answer_correctness,
    answer_relevance,
    answer_similarity,
    context_relevance,
    factual_correctness,
    faithfulness,
    judge_template,
)
from kite.evalkit.rubric import cohens_kappa, rubric_report
from kite.evalkit.runner import run_metric_track, save_metric_outputs
from kite.evalkit.simulate import render_feedback, save_triples, simulate_student
from kite.evalkit.types import (
    Category,
    ClaimVerdicts,
    EvalItem,
    METRIC_NAMES,
    MetricResult,
    RUBRIC_CRITERIA,
    RubricLabel,
    RubricRecord,
    SimTriple,
    Transition,
    load_eval_items,
    load_rubric_csv,
    save_eval_items,
    save_rubric_csv,
)

__all__ = [
    "Category",
    "ClaimVerdicts",
    "EvalItem",
    "METRIC_NAMES",
    "MetricResult",
    "RUBRIC_CRITERIA",
    "RubricLabel",
    "RubricRecord",
    "SimTriple",
    "Transition",
    "answer_correctness",
    "answer_relevance",
    "answer_similarity",
    "cohens_kappa",
    "context_relevance",
    "factual_correctness",
    "faithfulness",
    "judge_template",
    "load_eval_items",
    "load_rubric_csv",
    "render_feedback",
    "rubric_report",
    "run_metric_track",
    "save_eval_items",
    "save_metric_outputs",
    "save_rubric_csv",
    "save_triples",
    "simulate_student",
]
