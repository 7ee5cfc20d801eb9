from __future__ import annotations

import csv

from oracles import prevalence_recount

from scidebt.datastore import SatdClass, distribution
from scidebt.ingest import ArtifactKind
from scidebt.model import train
from scidebt.reporting import (
    PrevalenceReport,
    classify_corpus,
    classify_corpus_to_file,
    distribution_csv,
    load_predictions,
    prevalence_csv,
    write_json,
)
from scidebt.synthetic import synthetic_dataset, synthetic_instances

CC = ArtifactKind.CODE_COMMENT


def test_prevalence_percentages_and_display():
    report = PrevalenceReport()
    report.add(CC, SatdClass.NON_DEBT, 3)
    report.add(CC, SatdClass.TEST_DEBT, 1)
    assert report.kind_total(CC) == 4
    assert report.percentage(CC, SatdClass.NON_DEBT) == 75.0
    assert report.cell_display(CC, SatdClass.NON_DEBT) == "3 (75.00%)"
    assert report.percentage(ArtifactKind.COMMIT_MESSAGE, SatdClass.NON_DEBT) == 0.0


def test_prevalence_rows_shape():
    report = PrevalenceReport()
    report.add(CC, SatdClass.REQUIREMENT_DEBT, 2)
    rows = report.as_rows()
    assert rows[0] == ["class", "code_comment", "commit_message", "issue_section",
                       "pull_request_section"]
    assert [r[0] for r in rows[1:-1]] == [c.value for c in SatdClass]
    assert rows[1][1] == "2 (100.00%)"
    assert rows[-1] == ["total", "2", "0", "0", "0"]


def test_per_kind_percentages_sum_to_100():
    dataset = synthetic_dataset(seed=11)
    params = train(dataset)
    pool = synthetic_instances(400, seed=12)
    _, report = classify_corpus(params, pool)
    for kind in ArtifactKind:
        if report.kind_total(kind):
            total_pct = sum(report.percentage(kind, c) for c in SatdClass)
            assert abs(total_pct - 100.0) < 0.01


def test_classify_matches_recount_oracle():
    dataset = synthetic_dataset(seed=11)
    params = train(dataset)
    pool = synthetic_instances(250, seed=13)
    predictions, report = classify_corpus(params, pool)
    kind_by_id = {i.instance_id: i.kind.value for i in pool}
    stream = [
        {"kind": kind_by_id[p.instance_id], "predicted": p.predicted.value}
        for p in predictions
    ]
    recount = prevalence_recount(stream)
    for kind in ArtifactKind:
        for cls in SatdClass:
            want = recount.get(kind.value, {}).get(cls.value, 0)
            assert report.counts[kind][cls] == want


def test_streaming_classify_writes_jsonl_and_checkpoints(tmp_path):
    dataset = synthetic_dataset(seed=11)
    params = train(dataset)
    pool = synthetic_instances(25, seed=14)
    out = tmp_path / "preds.jsonl"
    report = classify_corpus_to_file(params, iter(pool), out, checkpoint_every=10)
    records = load_predictions(out)
    assert len(records) == 25
    assert {"instance_id", "scores", "predicted", "confidence", "margin"} <= set(records[0])
    progress = (tmp_path / "preds.progress").read_text().split()
    assert progress == ["10", "20"]
    # in-memory and streaming agree
    _, mem_report = classify_corpus(params, pool)
    assert report.counts == mem_report.counts


def test_csv_writers(tmp_path):
    dataset = synthetic_dataset(seed=11)
    table = distribution(dataset)
    dist_path = tmp_path / "distribution.csv"
    distribution_csv(table, dist_path)
    with open(dist_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "class"
    assert len(rows) == 8  # header + 6 classes + total
    assert rows[-1][0] == "total"
    # numbers survive the round trip
    assert int(rows[1][-1]) == table.row_total(SatdClass.REQUIREMENT_DEBT)

    report = PrevalenceReport()
    report.add(CC, SatdClass.NON_DEBT, 5)
    prev_path = tmp_path / "prevalence.csv"
    prevalence_csv(report, prev_path)
    with open(prev_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[-1][1] == "5"


def test_write_json(tmp_path):
    path = tmp_path / "nested" / "out.json"
    write_json({"b": 1, "a": 2}, path)
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
