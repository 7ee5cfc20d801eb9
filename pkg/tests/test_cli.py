from __future__ import annotations

import json

from click.testing import CliRunner

from scidebt.cli import main
from scidebt.datastore import dataset_to_jsonl
from scidebt.loop import Workspace
from scidebt.synthetic import synthetic_dataset, synthetic_instances


def _run(args):
    result = CliRunner().invoke(main, args, catch_exceptions=False)
    return result


def test_extract_normalize_pipeline(toy_root, tmp_path):
    raw = tmp_path / "raw.jsonl"
    result = _run([
        "extract", "--repo", str(toy_root), "--config", str(toy_root / "config.yaml"),
        "--out", str(raw),
    ])
    assert result.exit_code == 0, result.output
    lines = [l for l in raw.read_text().splitlines() if l.strip()]
    assert len(lines) == 195
    assert "bot-filtered 7" in result.output
    assert "empty commits 3" in result.output

    norm = tmp_path / "normalized.jsonl"
    result = _run([
        "normalize", "--in", str(raw), "--config", str(toy_root / "config.yaml"),
        "--out", str(norm),
    ])
    assert result.exit_code == 0, result.output
    instances = [json.loads(l) for l in norm.read_text().splitlines() if l.strip()]
    assert len(instances) == 190
    report = json.loads((tmp_path / "normalized.jsonl.report.json").read_text())
    assert report["license_dropped"] == 2
    assert report["duplicates_dropped"] == {"commit_message": 2,
                                            "pull_request_section": 1}
    assert report["kept"] == 190


def test_extract_warns_on_failed_selection(toy_root, tmp_path):
    # default selection demands >= 10000 commits; shrink the manifest copy
    repo = tmp_path / "repo"
    repo.mkdir()
    manifest = json.loads((toy_root / "manifest.json").read_text())
    manifest["commit_count"] = 3
    (repo / "manifest.json").write_text(json.dumps(manifest))
    (repo / "a.py").write_text("# only comment\n")
    result = CliRunner().invoke(
        main, ["extract", "--repo", str(repo), "--out", str(tmp_path / "r.jsonl")],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    assert "fails the selection thresholds" in result.stderr


def test_train_is_byte_stable(tmp_path):
    data = tmp_path / "labeled.jsonl"
    dataset_to_jsonl(synthetic_dataset(seed=41), data)
    m1 = tmp_path / "m1.model"
    m2 = tmp_path / "m2.model"
    r1 = _run(["train", "--data", str(data), "--out", str(m1)])
    r2 = _run(["train", "--data", str(data), "--out", str(m2)])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert m1.read_bytes() == m2.read_bytes()
    digest = r1.output.split()[1]
    assert digest in r2.output


def test_train_classify_outputs(tmp_path):
    data = tmp_path / "labeled.jsonl"
    dataset_to_jsonl(synthetic_dataset(seed=41), data)
    model = tmp_path / "m.model"
    assert _run(["train", "--data", str(data), "--alpha", "0.5", "--lam", "0.7",
                 "--out", str(model)]).exit_code == 0

    corpus = tmp_path / "corpus.jsonl"
    with open(corpus, "w") as fh:
        for inst in synthetic_instances(80, seed=42):
            fh.write(json.dumps(inst.as_dict()) + "\n")
    preds = tmp_path / "preds.jsonl"
    result = _run(["classify", "--model", str(model), "--corpus", str(corpus),
                   "--out", str(preds)])
    assert result.exit_code == 0, result.output
    assert len(preds.read_text().splitlines()) == 80
    assert (tmp_path / "preds_prevalence.csv").exists()
    prevalence = json.loads((tmp_path / "preds_prevalence.json").read_text())
    assert sum(block["total"] for block in prevalence.values()) == 80


def test_train_exclude_class(tmp_path):
    data = tmp_path / "labeled.jsonl"
    dataset_to_jsonl(synthetic_dataset(seed=41), data)
    model = tmp_path / "m.model"
    result = _run(["train", "--data", str(data), "--exclude", "scientific_debt",
                   "--out", str(model)])
    assert result.exit_code == 0
    payload = json.loads(model.read_text().splitlines()[1])
    assert "scientific_debt" not in payload["trained_classes"]


def _seed_workspace(root) -> Workspace:
    ws = Workspace(root)
    dataset_to_jsonl(synthetic_dataset(seed=51), ws.dataset_path)
    ws.corpus_path.parent.mkdir(parents=True, exist_ok=True)
    with open(ws.corpus_path, "w") as fh:
        for inst in synthetic_instances(300, seed=52):
            fh.write(json.dumps(inst.as_dict()) + "\n")
    return ws


def test_select_then_ingest_labels(tmp_path):
    ws = _seed_workspace(tmp_path)
    result = _run(["select", "--workspace", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "round1-" in result.output
    state = ws.load_state()
    assert state.pending_batches

    batch_id = state.pending_batches[0]
    data = ws.read_batch_file(batch_id)
    labels = [
        {"instance_id": item["instance_id"], "label": "non_debt", "annotator": "cli"}
        for item in data["items"][:3]
    ]
    labels_file = tmp_path / "labels.json"
    labels_file.write_text(json.dumps(labels))
    result = _run(["ingest-labels", "--workspace", str(tmp_path),
                   "--batch", batch_id, "--labels", str(labels_file)])
    assert result.exit_code == 0, result.output
    assert "3 labels appended" in result.output

    # resolving the same batch again fails cleanly
    result = CliRunner().invoke(main, ["ingest-labels", "--workspace", str(tmp_path),
                                       "--batch", batch_id,
                                       "--labels", str(labels_file)])
    assert result.exit_code != 0
    assert "already resolved" in result.output


def test_kappa_command(tmp_path):
    pairs = tmp_path / "pairs.json"
    pairs.write_text(json.dumps({
        "pilot": [["s", "s", "n", "n"], ["s", "n", "n", "n"]],
    }))
    result = _run(["kappa", "--pairs", str(pairs)])
    assert result.exit_code == 0
    assert "pilot" in result.output
    assert "0.500" in result.output
    assert "combined" in result.output

    out_csv = tmp_path / "kappa.csv"
    result = _run(["kappa", "--pairs", str(pairs), "--out", str(out_csv)])
    assert result.exit_code == 0
    assert out_csv.read_text().startswith("source,agreement,kappa")


def test_report_command(tmp_path):
    ws = _seed_workspace(tmp_path)
    # predictions for the prevalence block
    from scidebt.model import train as train_fn
    from scidebt.reporting import classify_corpus_to_file

    params = train_fn(ws.load_dataset())
    classify_corpus_to_file(params, ws.load_corpus(), ws.predictions_path)
    ws.calibration_path.parent.mkdir(parents=True, exist_ok=True)
    ws.calibration_path.write_text(json.dumps({
        "pilot": [["a", "b"], ["a", "b"]],
    }))
    out_dir = tmp_path / "out"
    result = _run(["report", "--workspace", str(tmp_path), "--out", str(out_dir)])
    assert result.exit_code == 0, result.output
    for name in ("distribution.csv", "distribution.png", "exclusion.csv",
                 "exclusion.png", "prevalence.csv", "prevalence.png",
                 "calibration.csv"):
        assert (out_dir / name).exists(), name


def test_report_with_nothing_fails(tmp_path):
    result = CliRunner().invoke(main, ["report", "--workspace", str(tmp_path)])
    assert result.exit_code != 0
    assert "nothing to report" in result.output


def test_sample_size_command():
    result = _run(["sample-size"])
    assert result.exit_code == 0
    assert result.output.strip() == "384"
    result = CliRunner().invoke(main, ["sample-size", "--confidence", "0.5"])
    assert result.exit_code != 0


def test_serve_help():
    result = _run(["serve", "--help"])
    assert result.exit_code == 0
    assert "--port" in result.output
