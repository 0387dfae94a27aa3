import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kite.errors import EvalError
from kite.evalkit import (
    Category,
    EvalItem,
    RubricLabel,
    RubricRecord,
    Transition,
    answer_correctness,
    answer_relevance,
    answer_similarity,
    cohens_kappa,
    context_relevance,
    factual_correctness,
    faithfulness,
    load_eval_items,
    load_rubric_csv,
    render_feedback,
    rubric_report,
    run_metric_track,
    save_eval_items,
    save_metric_outputs,
    save_rubric_csv,
    simulate_student,
)
from kite.evalkit.types import RUBRIC_CRITERIA
from kite.providers import MockEmbedder, MockJudge, MockStudent, ScriptedEmbedder, ScriptedText

from oracles import fence_kappa
from synth import make_engine, make_eval_items


# ---------------------------------------------------------------------------
# faithfulness


def test_faithfulness_three_of_four_supported():
    claims_reply = json.dumps({"claims": ["c one", "c two", "c three", "c four"]})
    verdict_reply = json.dumps(
        {"verdicts": ["supported", "supported", "supported", "unsupported"]}
    )
    judge = ScriptedText([claims_reply, verdict_reply])
    assert faithfulness("answer", ["ctx"], judge) == 0.75


def test_faithfulness_all_supported():
    judge = ScriptedText(
        [json.dumps({"claims": ["a", "b"]}), json.dumps({"verdicts": ["supported", "supported"]})]
    )
    assert faithfulness("answer", ["ctx"], judge) == 1.0


def test_faithfulness_zero_claims_is_na():
    judge = ScriptedText([json.dumps({"claims": []})])
    assert faithfulness("", ["ctx"], judge) is None


def test_faithfulness_malformed_judge_retries_then_errors():
    judge = ScriptedText(["not json", "still not json"])
    with pytest.raises(EvalError) as err:
        faithfulness("answer", ["ctx"], judge)
    assert err.value.code == "judge_format"
    assert len(judge.calls) == 2


# ---------------------------------------------------------------------------
# answer_relevance


def test_answer_relevance_echoed_question_is_one():
    question = "What is the frontier?"
    judge = ScriptedText([json.dumps({"questions": [question] * 3})])
    score = answer_relevance(question, "some answer", judge, MockEmbedder(dim=16))
    assert score == pytest.approx(1.0, abs=1e-6)


def test_answer_relevance_orthogonal_is_zero():
    judge = ScriptedText([json.dumps({"questions": ["g1", "g2", "g3"]})])
    embedder = ScriptedEmbedder(
        {"q": [1.0, 0.0], "g1": [0.0, 1.0], "g2": [0.0, 1.0], "g3": [0.0, 1.0]}
    )
    assert answer_relevance("q", "answer", judge, embedder) == pytest.approx(0.0, abs=1e-9)


def test_answer_relevance_mean_of_cosines():
    judge = ScriptedText([json.dumps({"questions": ["g1", "g2", "g3"]})])
    embedder = ScriptedEmbedder(
        {
            "q": [1.0, 0.0],
            "g1": [1.0, 0.0],
            "g2": [0.5, math.sqrt(3) / 2],
            "g3": [0.0, 1.0],
        }
    )
    assert answer_relevance("q", "answer", judge, embedder) == pytest.approx(0.5, abs=1e-9)


# ---------------------------------------------------------------------------
# context_relevance


def test_context_relevance_ratio():
    judge = ScriptedText([json.dumps({"verdicts": ["useful"] * 9 + ["not_useful"]})])
    assert context_relevance("q", ["ctx"], judge) == pytest.approx(0.9)


def test_context_relevance_all_useful():
    judge = ScriptedText([json.dumps({"verdicts": ["useful", "useful"]})])
    assert context_relevance("q", ["ctx"], judge) == 1.0


def test_context_relevance_empty_contexts_na():
    assert context_relevance("q", [], MockJudge()) is None


# ---------------------------------------------------------------------------
# answer_similarity


def test_answer_similarity_identical_texts():
    embedder = MockEmbedder(dim=16)
    assert answer_similarity("same text", "same text", embedder) == pytest.approx(1.0, abs=1e-6)


def test_answer_similarity_orthogonal():
    embedder = ScriptedEmbedder({"a": [1.0, 0.0], "b": [0.0, 1.0]})
    assert answer_similarity("a", "b", embedder) == 0.0


def test_answer_similarity_sixty_degrees():
    embedder = ScriptedEmbedder({"a": [1.0, 0.0], "b": [0.5, math.sqrt(3) / 2]})
    assert answer_similarity("a", "b", embedder) == pytest.approx(0.5, abs=1e-9)


def test_answer_similarity_negative_cosine_clamped():
    embedder = ScriptedEmbedder({"a": [1.0, 0.0], "b": [-1.0, 0.0]})
    assert answer_similarity("a", "b", embedder) == 0.0


# ---------------------------------------------------------------------------
# factual_correctness / answer_correctness


def _fc(tp, fp, fn):
    judge = ScriptedText([json.dumps({"tp": tp, "fp": fp, "fn": fn})])
    return factual_correctness("a", "r", judge)


def test_factual_correctness_perfect():
    assert _fc(3, 0, 0) == 1.0


def test_factual_correctness_two_thirds():
    assert _fc(1, 1, 0) == pytest.approx(2 / 3)


def test_factual_correctness_zero():
    assert _fc(0, 2, 3) == 0.0


def test_factual_correctness_all_zero_na():
    assert _fc(0, 0, 0) is None


def test_factual_correctness_symmetric_under_fp_fn_swap():
    assert _fc(2, 3, 1) == _fc(2, 1, 3)


@given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20))
def test_factual_correctness_f1_properties(tp, fp, fn):
    got = _fc(tp, fp, fn)
    if tp == fp == fn == 0:
        assert got is None
    else:
        assert 0.0 <= got <= 1.0
        assert (got == 1.0) == (fp == 0 and fn == 0 and tp > 0)
        assert got == _fc(tp, fn, fp)


def test_answer_correctness_examples():
    assert answer_correctness(1.0, 1.0) == 1.0
    assert answer_correctness(0.4, 0.8) == pytest.approx(0.5, abs=1e-12)
    assert answer_correctness(0.0, 1.0) == 0.25
    assert answer_correctness(None, 0.5) is None


@given(st.floats(0, 1), st.floats(0, 1))
def test_answer_correctness_linearity(fc, sim):
    got = answer_correctness(fc, sim)
    assert got == pytest.approx(0.75 * fc + 0.25 * sim, abs=1e-12)
    assert 0.0 <= got <= 1.0


# ---------------------------------------------------------------------------
# Cohen's kappa


def test_kappa_identical_lists():
    assert cohens_kappa(["y", "n", "y"], ["y", "n", "y"]) == 1.0


def test_kappa_hand_case_half_agreement():
    a = ["Y", "Y", "N", "N"]
    b = ["Y", "N", "Y", "N"]
    # p_o = 0.5, p_e = 0.5 -> kappa = 0.0
    assert cohens_kappa(a, b) == pytest.approx(0.0, abs=1e-12)
    assert fence_kappa(a, b) == pytest.approx(0.0, abs=1e-12)


def test_kappa_hand_case_disjoint_marginals():
    a = ["Y", "Y", "Y"]
    b = ["N", "N", "N"]
    # marginal products give p_e = 0, p_o = 0 -> kappa = 0.0
    assert cohens_kappa(a, b) == pytest.approx(0.0, abs=1e-12)
    assert fence_kappa(a, b) == pytest.approx(0.0, abs=1e-12)


def test_kappa_constant_identical_lists_pe_one():
    assert cohens_kappa(["y", "y"], ["y", "y"]) == 1.0


def test_kappa_shape_mismatch():
    with pytest.raises(EvalError) as err:
        cohens_kappa(["y"], ["y", "n"])
    assert err.value.code == "shape"


def test_kappa_invariant_under_relabeling():
    a = ["y", "n", "y", "na", "n"]
    b = ["y", "y", "n", "na", "n"]
    relabel = {"y": "alpha", "n": "beta", "na": "gamma"}
    assert cohens_kappa(a, b) == pytest.approx(
        cohens_kappa([relabel[x] for x in a], [relabel[x] for x in b]), abs=1e-12
    )


# ---------------------------------------------------------------------------
# rubric report


def table3_records():
    counts = {
        Transition.INCORRECT_TO_CORRECT: 1,
        Transition.INCORRECT_TO_PARTIAL: 3,
        Transition.ALREADY_CORRECT: 17,
        Transition.PARTIAL_TO_CORRECT: 14,
        Transition.PARTIAL_TO_PARTIAL_IMPROVED: 6,
        Transition.NA: 3,
    }
    records = []
    i = 0
    for transition, count in counts.items():
        for _ in range(count):
            already = transition is Transition.ALREADY_CORRECT
            labels = {
                "remediation_identifying": RubricLabel.NA if already else RubricLabel.YES,
                "remediation_acknowledging": RubricLabel.NA if already else RubricLabel.YES,
                "scaffolding": RubricLabel.YES,
                "guidance": RubricLabel.YES,
                "coherence": RubricLabel.YES,
                "tone": RubricLabel.YES,
            }
            records.append(
                RubricRecord(item_id=f"i{i:03d}", rater_id="r1", labels=labels, transition=transition)
            )
            i += 1
    return records


def test_rubric_report_table3_percentages_and_improvement():
    report = rubric_report(table3_records())
    t = report["transitions"]
    assert t["incorrect_to_correct"]["count"] == 1
    assert t["incorrect_to_correct"]["pct"] == pytest.approx(2.27, abs=0.01)
    assert t["incorrect_to_partial"]["pct"] == pytest.approx(6.82, abs=0.01)
    assert t["already_correct"]["pct"] == pytest.approx(38.64, abs=0.01)
    assert t["partial_to_correct"]["pct"] == pytest.approx(31.82, abs=0.01)
    assert t["partial_to_partial_improved"]["pct"] == pytest.approx(13.63, abs=0.01)
    assert t["na"]["pct"] == pytest.approx(6.82, abs=0.01)
    # 24 improved out of the 27 not already correct
    assert report["improved"] == 24
    assert report["improvable"] == 27
    assert report["improvement_rate"] * 100 == pytest.approx(88.89, abs=0.01)


def test_rubric_report_all_already_correct_rate_na():
    records = [
        RubricRecord(
            item_id=f"i{i}",
            rater_id="r1",
            labels={c: RubricLabel.NA for c in RUBRIC_CRITERIA},
            transition=Transition.ALREADY_CORRECT,
        )
        for i in range(5)
    ]
    report = rubric_report(records)
    assert report["improvement_rate"] is None


def test_rubric_report_single_record_all_yes():
    records = [
        RubricRecord(
            item_id="i0",
            rater_id="r1",
            labels={c: RubricLabel.YES for c in RUBRIC_CRITERIA},
            transition=Transition.PARTIAL_TO_CORRECT,
        )
    ]
    report = rubric_report(records)
    for criterion in RUBRIC_CRITERIA:
        assert report["criteria"][criterion]["pct_yes"] == 100.0
    assert report["improvement_rate"] == 1.0


def test_rubric_percentages_sum_to_hundred():
    report = rubric_report(table3_records())
    for row in report["criteria"].values():
        assert row["pct_yes"] + row["pct_no"] + row["pct_na"] == pytest.approx(100.0, abs=0.01)
    total_pct = sum(row["pct"] for row in report["transitions"].values())
    assert total_pct == pytest.approx(100.0, abs=0.01)


def test_rubric_agreement_two_raters():
    base = table3_records()[:10]
    second = [
        RubricRecord(item_id=r.item_id, rater_id="r2", labels=dict(r.labels), transition=r.transition)
        for r in base
    ]
    report = rubric_report(base + second)
    agreement = report["agreement"]
    assert agreement["raters"] == ["r1", "r2"]
    assert agreement["raw_agreement"] == 1.0
    assert agreement["kappa_overall"] == 1.0


def test_rubric_csv_round_trip(tmp_path):
    records = table3_records()[:6]
    path = tmp_path / "rubric.csv"
    save_rubric_csv(records, path)
    loaded = load_rubric_csv(path)
    assert loaded == records


def test_rubric_csv_unknown_label(tmp_path):
    path = tmp_path / "rubric.csv"
    header = "item_id,rater_id,remediation_identifying,remediation_acknowledging,scaffolding,guidance,coherence,tone,transition"
    path.write_text(header + "\ni0,r1,yes,yes,maybe,yes,yes,yes,na\n")
    with pytest.raises(EvalError) as err:
        load_rubric_csv(path)
    assert err.value.code == "label"


# ---------------------------------------------------------------------------
# metric track


def test_run_metric_track_small_fixture(tmp_path):
    engine = make_engine(n_docs=4)
    items = make_eval_items(3, 2, 2)  # 5 metric-track items, 2 procedural skipped
    results, summary = run_metric_track(items, engine, MockJudge(), engine.embedder, top_k=5)
    assert summary["n_items"] == 5
    assert len(results) == 5
    assert set(summary["metrics"]) == {
        "faithfulness",
        "answer_relevance",
        "context_relevance",
        "answer_similarity",
        "factual_correctness",
        "answer_correctness",
    }
    for result in results:
        assert result.n_contexts <= 5
        for name in ("answer_similarity",):
            value = result.value(name)
            assert value is None or 0.0 <= value <= 1.0
    per_item, summary_path = save_metric_outputs(results, summary, tmp_path / "out")
    assert per_item.exists() and summary_path.exists()
    rows = [json.loads(line) for line in per_item.read_text().splitlines()]
    assert len(rows) == 5


def test_run_metric_track_aggregates_mean_and_population_std():
    engine = make_engine(n_docs=3)
    items = make_eval_items(2, 0, 0)
    scripted = []
    # per item: classify_claims, similarity via embedder, decompose, entail,
    # generate_questions, judge_sentences; two items with faithfulness 0.5, 1.0
    for verdicts in (["supported", "unsupported"], ["supported", "supported"]):
        scripted += [
            json.dumps({"tp": 1, "fp": 0, "fn": 0}),
            json.dumps({"claims": ["claim one", "claim two"]}),
            json.dumps({"verdicts": verdicts}),
            json.dumps({"questions": [items[0].question] * 3}),
            json.dumps({"verdicts": ["useful"]}),
        ]
    judge = ScriptedText(scripted)
    results, summary = run_metric_track(items, engine, judge, engine.embedder, top_k=5)
    row = summary["metrics"]["faithfulness"]
    assert row["mean"] == pytest.approx(0.75)
    assert row["std"] == pytest.approx(0.25)
    assert row["n"] == 2


def test_run_metric_track_deterministic():
    items = make_eval_items(3, 0, 1)

    def run():
        engine = make_engine(n_docs=3)
        results, summary = run_metric_track(items, engine, MockJudge(), engine.embedder, top_k=5)
        return json.dumps([r.to_record() for r in results]) + json.dumps(summary)

    assert run() == run()


def test_run_metric_track_parallel_matches_serial():
    items = make_eval_items(4, 0, 2)
    engine = make_engine(n_docs=3)
    serial = run_metric_track(items, engine, MockJudge(), engine.embedder, top_k=5)
    engine2 = make_engine(n_docs=3)
    parallel = run_metric_track(items, engine2, MockJudge(), engine2.embedder, top_k=5, max_workers=4)
    assert [r.to_record() for r in serial[0]] == [r.to_record() for r in parallel[0]]
    assert serial[1]["metrics"] == parallel[1]["metrics"]


def test_eval_items_jsonl_round_trip(tmp_path):
    items = make_eval_items(2, 1, 1)
    path = tmp_path / "eval.jsonl"
    save_eval_items(items, path)
    assert load_eval_items(path) == items


# ---------------------------------------------------------------------------
# simulated student


def test_simulate_protocol_order_and_verbatim_feedback():
    engine = make_engine(n_docs=3)
    student = MockStudent()
    items = make_eval_items(0, 3, 0)
    triples, errors = simulate_student(items, student, engine)
    assert not errors
    assert len(triples) == 3
    assert [t.item_id for t in triples] == [i.item_id for i in items]
    # two student calls per item, round1 then round2
    assert len(student.calls) == 6
    for k, triple in enumerate(triples):
        round1_prompt = student.calls[2 * k]
        round2_prompt = student.calls[2 * k + 1]
        assert "Tutor feedback:" not in round1_prompt
        assert triple.round1_answer in round2_prompt
        assert triple.feedback_text in round2_prompt  # feedback verbatim
        assert triple.round1_answer and triple.round2_answer
        assert triple.feedback.guiding_questions is not None


def test_simulate_skips_non_procedural():
    engine = make_engine(n_docs=2)
    items = make_eval_items(2, 1, 1)
    triples, _ = simulate_student(items, MockStudent(), engine)
    assert len(triples) == 1


def test_render_feedback_includes_guiding_questions():
    engine = make_engine(n_docs=2)
    response, _ = engine.evaluate_answer("What is the frontier?", "It is a stack.")
    text = render_feedback(response)
    assert response.answer in text
    for question in response.guiding_questions or []:
        assert question in text
