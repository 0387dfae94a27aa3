"""Expert-rubric reporting: per-criterion tables, transition breakdown,
inter-rater agreement (raw rate and Cohen's kappa)."""

from __future__ import annotations

from collections import Counter, defaultdict
from itertools import combinations
from typing import Sequence

from kite.errors import EvalError
from kite.evalkit.types import (
    IMPROVED_TRANSITIONS,
    RUBRIC_CRITERIA,
    RubricRecord,
    Transition,
)


def cohens_kappa(labels_a: Sequence, labels_b: Sequence) -> float | None:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e).

    Chance agreement uses the raters' marginal products. When p_e is 1 the
    statistic is defined as 1.0 for perfect observed agreement and NA (None)
    otherwise.
    """
    if len(labels_a) != len(labels_b):
        raise EvalError(
            f"label lists differ in length: {len(labels_a)} vs {len(labels_b)}", code="shape"
        )
    n = len(labels_a)
    if n == 0:
        raise EvalError("label lists must be non-empty", code="shape")
    observed = sum(a == b for a, b in zip(labels_a, labels_b)) / n
    marginals_a = Counter(labels_a)
    marginals_b = Counter(labels_b)
    categories = set(marginals_a) | set(marginals_b)
    expected = sum(
        (marginals_a.get(c, 0) / n) * (marginals_b.get(c, 0) / n) for c in categories
    )
    if expected == 1.0:
        return 1.0 if observed == 1.0 else None
    return (observed - expected) / (1.0 - expected)


def _percent_row(counts: Counter, total: int, keys: Sequence[str]) -> dict:
    return {key: (100.0 * counts.get(key, 0) / total if total else 0.0) for key in keys}


def rubric_report(records: list[RubricRecord]) -> dict:
    """Aggregate rubric records into criterion, transition, and agreement tables.

    With multiple raters, the transition table uses one label per item (from
    the lowest rater_id, deterministically); the improvement rate is improved
    transitions over items that were not already correct.
    """
    if not records:
        raise EvalError("no rubric records", code="shape")

    criteria_table: dict[str, dict] = {}
    for criterion in RUBRIC_CRITERIA:
        counts = Counter(r.labels[criterion].value for r in records)
        total = len(records)
        row = _percent_row(counts, total, ("yes", "no", "na"))
        criteria_table[criterion] = {
            "pct_yes": row["yes"],
            "pct_no": row["no"],
            "pct_na": row["na"],
            "n": total,
        }

    # One transition per item: deterministic pick from the lowest rater id.
    by_item: dict[str, RubricRecord] = {}
    for record in records:
        current = by_item.get(record.item_id)
        if current is None or record.rater_id < current.rater_id:
            by_item[record.item_id] = record
    transitions = [r.transition for r in by_item.values()]
    n_items = len(transitions)
    transition_counts = Counter(transitions)
    transition_table = {
        t.value: {
            "count": transition_counts.get(t, 0),
            "pct": 100.0 * transition_counts.get(t, 0) / n_items if n_items else 0.0,
        }
        for t in Transition
    }
    improvable = n_items - transition_counts.get(Transition.ALREADY_CORRECT, 0)
    improved = sum(transition_counts.get(t, 0) for t in IMPROVED_TRANSITIONS)
    improvement_rate = (improved / improvable) if improvable > 0 else None

    agreement = _agreement_tables(records)

    return {
        "n_records": len(records),
        "n_items": n_items,
        "criteria": criteria_table,
        "transitions": transition_table,
        "improved": improved,
        "improvable": improvable,
        "improvement_rate": improvement_rate,
        "agreement": agreement,
    }


def _agreement_tables(records: list[RubricRecord]) -> dict:
    """Raw agreement and kappa per criterion, pooled over rater pairs."""
    by_rater: dict[str, dict[str, RubricRecord]] = defaultdict(dict)
    for record in records:
        by_rater[record.rater_id][record.item_id] = record
    raters = sorted(by_rater)
    if len(raters) < 2:
        return {"raters": raters, "raw_agreement": None, "kappa_per_criterion": None, "kappa_overall": None}

    per_criterion_pairs: dict[str, tuple[list, list]] = {c: ([], []) for c in RUBRIC_CRITERIA}
    pooled_a: list[str] = []
    pooled_b: list[str] = []
    for rater_a, rater_b in combinations(raters, 2):
        shared = sorted(set(by_rater[rater_a]) & set(by_rater[rater_b]))
        for item_id in shared:
            rec_a = by_rater[rater_a][item_id]
            rec_b = by_rater[rater_b][item_id]
            for criterion in RUBRIC_CRITERIA:
                a = rec_a.labels[criterion].value
                b = rec_b.labels[criterion].value
                per_criterion_pairs[criterion][0].append(a)
                per_criterion_pairs[criterion][1].append(b)
                pooled_a.append(a)
                pooled_b.append(b)

    if not pooled_a:
        return {"raters": raters, "raw_agreement": None, "kappa_per_criterion": None, "kappa_overall": None}

    raw = sum(a == b for a, b in zip(pooled_a, pooled_b)) / len(pooled_a)
    kappa_per_criterion = {}
    for criterion, (a_list, b_list) in per_criterion_pairs.items():
        kappa_per_criterion[criterion] = cohens_kappa(a_list, b_list) if a_list else None
    return {
        "raters": raters,
        "raw_agreement": raw,
        "kappa_per_criterion": kappa_per_criterion,
        "kappa_overall": cohens_kappa(pooled_a, pooled_b),
    }
