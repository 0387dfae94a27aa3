import json

import pytest

from kite.cli import main
from kite.evalkit import save_eval_items
from kite.evalkit.types import RubricLabel, RubricRecord, Transition, save_rubric_csv
from kite.evalkit.types import RUBRIC_CRITERIA

from synth import make_eval_items


@pytest.fixture()
def course_dir(tmp_path):
    docs = tmp_path / "docs"
    docs.mkdir()
    (docs / "search.txt").write_text(
        "CS Notes\n1. Graph Search\nBreadth first search explores the graph level by level. "
        "It keeps the frontier in a queue. Depth first search uses a stack instead.\n1"
        "\fCS Notes\n2. Heuristics\nThe A star algorithm orders nodes by f value. "
        "The f value adds path cost and heuristic estimate. Admissible heuristics never overestimate.\n2",
        encoding="utf-8",
    )
    (docs / "sorting.md").write_text(
        "3. Sorting Methods\nMerge sort divides the array and merges sorted halves. "
        "Quick sort partitions around a pivot element.",
        encoding="utf-8",
    )
    return docs


@pytest.fixture()
def built_index(course_dir, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    assert main(["ingest", str(course_dir), "--source-class", "official", "--out", str(corpus)]) == 0
    index_dir = tmp_path / "idx"
    assert main([
        "index", str(corpus), "--out", str(index_dir), "--dim", "32", "--provider", "mock",
    ]) == 0
    return index_dir


def test_ingest_writes_corpus(course_dir, tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    code = main(["ingest", str(course_dir), "--out", str(corpus)])
    assert code == 0
    lines = [json.loads(l) for l in corpus.read_text().splitlines()]
    assert lines
    assert {"chunk_id", "doc_id", "source_class", "section_header", "text",
            "char_len", "page_start", "page_end"} == set(lines[0])


def test_ask_prints_tutor_response_json(built_index, capsys):
    code = main(["ask", "What is A*?", "--index", str(built_index), "--mock-providers"])
    assert code == 0
    out = capsys.readouterr().out
    payload = json.loads(out)
    assert payload["intent"] == "direct_question"
    assert payload["answer"]


def test_ask_explain_prints_stage_table(built_index, capsys):
    code = main(["ask", "What is the f value?", "--index", str(built_index), "--explain"])
    assert code == 0
    out = capsys.readouterr().out
    assert "stage scores" in out
    assert "boosted" in out


def test_ask_json_includes_provenance(built_index, capsys):
    code = main(["ask", "merge sort", "--index", str(built_index), "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["retrieval"]
    assert payload["routing"] == "new_topic"


def test_unknown_subcommand_exits_one(capsys):
    assert main(["frobnicate"]) == 1


def test_no_subcommand_exits_one(capsys):
    assert main([]) == 1


def test_missing_rubric_file_exits_two(tmp_path, capsys):
    assert main(["eval", "rubric", "--records", str(tmp_path / "missing.csv")]) == 2


def test_eval_rubric_on_fixture(tmp_path, capsys):
    records = [
        RubricRecord(
            item_id=f"i{i}",
            rater_id="r1",
            labels={c: RubricLabel.YES for c in RUBRIC_CRITERIA},
            transition=Transition.PARTIAL_TO_CORRECT,
        )
        for i in range(4)
    ]
    path = tmp_path / "rubric.csv"
    save_rubric_csv(records, path)
    out_path = tmp_path / "rubric_summary.json"
    code = main(["eval", "rubric", "--records", str(path), "--out", str(out_path)])
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report["improvement_rate"] == 1.0


def test_eval_metrics_end_to_end(built_index, tmp_path, capsys):
    dataset = tmp_path / "eval.jsonl"
    save_eval_items(make_eval_items(3, 1, 2), dataset)
    out_dir = tmp_path / "eval_out"
    code = main([
        "eval", "metrics", "--dataset", str(dataset), "--index", str(built_index),
        "--top-k", "5", "--out", str(out_dir),
    ])
    assert code == 0
    summary = json.loads((out_dir / "metrics_summary.json").read_text())
    assert summary["n_items"] == 5
    assert summary["top_k"] == 5
    assert len(summary["metrics"]) == 6
    rows = [json.loads(l) for l in (out_dir / "metrics.jsonl").read_text().splitlines()]
    assert len(rows) == summary["n_completed"]


def test_eval_simulate_end_to_end(built_index, tmp_path, capsys):
    dataset = tmp_path / "eval.jsonl"
    save_eval_items(make_eval_items(1, 3, 0), dataset)
    out = tmp_path / "triples.jsonl"
    code = main([
        "eval", "simulate", "--dataset", str(dataset), "--index", str(built_index),
        "--student-provider", "mock", "--out", str(out),
    ])
    assert code == 0
    triples = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(triples) == 3
    for triple in triples:
        assert triple["round1_answer"] and triple["round2_answer"]
        assert triple["feedback"]["guiding_questions"]


def test_index_missing_corpus_exits_two(tmp_path, capsys):
    assert main(["index", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "idx")]) == 2
