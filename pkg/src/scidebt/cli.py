"""Command-line interface.

Every command takes --config/--seed/--out; commands whose work is fully
deterministic accept --seed anyway so scripted pipelines can pass one
uniformly.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from . import agreement as agreement_mod
from . import figures, reporting
from .config import Config, load_config, syntax_for_path
from .datastore import SatdClass, distribution, load_jsonl, sample_size
from .ingest import (
    RawArtifact,
    RepoMeta,
    extract_comments,
    extract_commit_messages,
    filter_bots,
    filter_repositories,
    load_issue_archive,
)
from .loop import Workspace, build_strategies
from .model import exclusion_experiment, load_model, save_model, train
from .normalize import NormalizedInstance, normalize_corpus


def _common(f):
    f = click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                     help="YAML config file.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True,
                     help="Seed for any randomized step.")(f)
    f = click.option("--out", "out_path", type=click.Path(), default=None,
                     help="Output path.")(f)
    return f


@click.group()
def main():
    """Mining and classification tooling for self-admitted technical debt."""


def _load_cfg(config_path) -> Config:
    return load_config(config_path)


def _workspace(cfg: Config, root: str | None) -> Workspace:
    base = Path(root) if root else cfg.base_dir
    return Workspace(base, base_alpha=cfg.alpha, base_lam=cfg.interpolation)


@main.command()
@click.option("--repo", "repo_dir", type=click.Path(exists=True, file_okay=False), required=True,
              help="Repository snapshot directory (manifest.json + sources + archives).")
@_common
def extract(repo_dir, config_path, seed, out_path):
    """Extract raw artifacts from a repository snapshot into JSONL."""
    cfg = _load_cfg(config_path)
    repo_dir = Path(repo_dir)
    manifest = json.loads((repo_dir / "manifest.json").read_text(encoding="utf-8"))
    meta = RepoMeta(
        name=manifest["name"],
        commit_count=manifest["commit_count"],
        contributor_count=manifest["contributor_count"],
        age_days=manifest["age_days"],
        star_count=manifest["star_count"],
        days_since_last_commit=manifest["days_since_last_commit"],
        is_public=manifest["is_public"],
    )
    if not filter_repositories([meta], cfg.selection):
        click.echo(f"warning: {meta.name} fails the selection thresholds", err=True)
    project = meta.name
    syntaxes = cfg.syntaxes
    artifacts: list[RawArtifact] = []
    skipped_commits = 0
    for path in sorted(repo_dir.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(repo_dir).as_posix()
        syntax = syntax_for_path(path, syntaxes)
        if syntax is not None:
            artifacts.extend(
                extract_comments(
                    path.read_text(encoding="utf-8", errors="replace"),
                    syntax.name,
                    syntaxes,
                    project=project,
                    path=rel,
                )
            )
    commits_file = repo_dir / "commits.jsonl"
    if commits_file.exists():
        records = [
            json.loads(line)
            for line in commits_file.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        commit_artifacts, skipped_commits = extract_commit_messages(records, project)
        artifacts.extend(commit_artifacts)
    for archive in ("issues.jsonl", "prs.jsonl"):
        archive_path = repo_dir / archive
        if archive_path.exists():
            artifacts.extend(load_issue_archive(archive_path, project))
    before = len(artifacts)
    artifacts = filter_bots(artifacts, cfg.bots)
    out_path = Path(out_path or "raw_artifacts.jsonl")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for art in artifacts:
            fh.write(json.dumps(art.as_dict(), sort_keys=True) + "\n")
    click.echo(
        f"{len(artifacts)} artifacts -> {out_path} "
        f"(bot-filtered {before - len(artifacts)}, empty commits {skipped_commits})"
    )


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True), required=True,
              help="Raw artifact JSONL from extract.")
@_common
def normalize(in_path, config_path, seed, out_path):
    """Normalize raw artifacts: clean, license-filter, dedupe."""
    cfg = _load_cfg(config_path)
    artifacts = []
    with open(in_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                artifacts.append(RawArtifact.from_dict(json.loads(line)))
    instances, report = normalize_corpus(artifacts, cfg.syntaxes, cfg.license_keywords)
    out_path = Path(out_path or "normalized.jsonl")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.as_dict(), sort_keys=True) + "\n")
    report_path = out_path.with_name(out_path.name + ".report.json")
    reporting.write_json(report.as_dict(), report_path)
    click.echo(f"{report.kept} instances -> {out_path} (report {report_path})")


@main.command("train")
@click.option("--data", "data_path", type=click.Path(exists=True), required=True,
              help="Labeled dataset JSONL.")
@click.option("--alpha", type=float, default=None, help="Laplace smoothing constant.")
@click.option("--lam", "--lambda", "lam", type=float, default=None,
              help="Head/pooled interpolation weight in [0,1].")
@click.option("--exclude", "exclude_classes", multiple=True,
              help="Class value to exclude from training (repeatable).")
@_common
def train_cmd(data_path, alpha, lam, exclude_classes, config_path, seed, out_path):
    """Train the classifier; the output file is byte-stable per snapshot."""
    cfg = _load_cfg(config_path)
    dataset = load_jsonl(data_path)
    exclude = {SatdClass(c) for c in exclude_classes}
    params = train(
        dataset,
        alpha=alpha if alpha is not None else cfg.alpha,
        lam=lam if lam is not None else cfg.interpolation,
        exclude=exclude,
    )
    out_path = Path(out_path or "model.scidebt")
    digest = save_model(params, out_path)
    click.echo(f"model {digest} -> {out_path} ({len(dataset)} instances)")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True,
              help="Normalized corpus JSONL.")
@_common
def classify(model_path, corpus_path, config_path, seed, out_path):
    """Classify a corpus; writes predictions JSONL plus a prevalence report."""
    params = load_model(model_path)

    def instances():
        with open(corpus_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield NormalizedInstance.from_dict(json.loads(line))

    out_path = Path(out_path or "predictions.jsonl")
    report = reporting.classify_corpus_to_file(params, instances(), out_path)
    csv_path = out_path.with_name(out_path.stem + "_prevalence.csv")
    reporting.prevalence_csv(report, csv_path)
    reporting.write_json(report.as_dict(), out_path.with_name(out_path.stem + "_prevalence.json"))
    click.echo(f"{report.grand_total()} predictions -> {out_path}; prevalence -> {csv_path}")


@main.command()
@click.option("--workspace", "workspace_dir", type=click.Path(), default=None,
              help="Loop workspace root (default: config directory).")
@_common
def select(workspace_dir, config_path, seed, out_path):
    """Open the next annotation round and emit selection batch files."""
    cfg = _load_cfg(config_path)
    ws = _workspace(cfg, workspace_dir)
    strategies = build_strategies(
        tau_hi=float(cfg.loop_value("tau_hi")),
        tau_lo=float(cfg.loop_value("tau_lo")),
        margin_max=float(cfg.loop_value("margin_max")),
        budgets=cfg.loop_value("budgets"),
    )
    batches = ws.start_round(strategies)
    for batch in batches:
        click.echo(f"{batch.batch_id}: {len(batch.items)} items (budget {batch.budget})")
    if not any(b.items for b in batches):
        click.echo("no items selected; round closed empty")


@main.command("ingest-labels")
@click.option("--workspace", "workspace_dir", type=click.Path(), default=None)
@click.option("--batch", "batch_id", required=True, help="Batch id to resolve.")
@click.option("--labels", "labels_path", type=click.Path(exists=True), required=True,
              help="JSON list of {instance_id, label, indicator?, annotator}.")
@_common
def ingest_labels(workspace_dir, batch_id, labels_path, config_path, seed, out_path):
    """Resolve a batch with human labels and append them to the dataset."""
    cfg = _load_cfg(config_path)
    ws = _workspace(cfg, workspace_dir)
    labels = json.loads(Path(labels_path).read_text(encoding="utf-8"))
    try:
        delta = ws.ingest_labels(batch_id, labels)
    except (ValueError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc)) from exc
    state = ws.load_state()
    click.echo(
        f"{len(delta)} labels appended; round {state.round}, "
        f"pending {len(state.pending_batches)} batches"
    )


@main.command()
@click.option("--pairs", "pairs_path", type=click.Path(exists=True), required=True,
              help='JSON {"source": [[labels_a], [labels_b]], ...}.')
@_common
def kappa(pairs_path, config_path, seed, out_path):
    """Agreement report per source plus a combined row."""
    pairs_raw = json.loads(Path(pairs_path).read_text(encoding="utf-8"))
    pairs = {name: (vecs[0], vecs[1]) for name, vecs in pairs_raw.items()}
    report = agreement_mod.calibration_report(pairs)
    for row in report.as_rows()[1:]:
        click.echo("  ".join(str(c) for c in row))
    if out_path:
        reporting.write_csv(report.as_rows(), out_path)
        click.echo(f"-> {out_path}")


@main.command()
@click.option("--workspace", "workspace_dir", type=click.Path(), default=None)
@_common
def report(workspace_dir, config_path, seed, out_path):
    """Render distribution/prevalence/exclusion tables as CSV plus figures."""
    cfg = _load_cfg(config_path)
    ws = _workspace(cfg, workspace_dir)
    out_dir = Path(out_path or (ws.root / "reports"))
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    dataset = None
    if ws.dataset_path.exists():
        dataset = load_jsonl(ws.dataset_path)
        table = distribution(dataset)
        reporting.distribution_csv(table, out_dir / "distribution.csv")
        figures.distribution_figure(table, out_dir / "distribution.png")
        written += ["distribution.csv", "distribution.png"]
        if any(i.label is SatdClass.SCIENTIFIC_DEBT for i in dataset.instances):
            excl = exclusion_experiment(dataset, alpha=cfg.alpha, lam=cfg.interpolation)
            reporting.write_csv(excl.as_rows(), out_dir / "exclusion.csv")
            figures.exclusion_figure(excl, out_dir / "exclusion.png")
            written += ["exclusion.csv", "exclusion.png"]

    if ws.predictions_path.exists() and ws.corpus_path.exists():
        corpus = {i.instance_id: i for i in ws.load_corpus()}
        prevalence = reporting.PrevalenceReport()
        for rec in reporting.load_predictions(ws.predictions_path):
            inst = corpus.get(rec["instance_id"])
            if inst is not None:
                prevalence.add(inst.kind, SatdClass(rec["predicted"]))
        reporting.prevalence_csv(prevalence, out_dir / "prevalence.csv")
        figures.prevalence_figure(prevalence, out_dir / "prevalence.png")
        written += ["prevalence.csv", "prevalence.png"]

    if ws.calibration_path.exists():
        pairs_raw = json.loads(ws.calibration_path.read_text(encoding="utf-8"))
        pairs = {name: (vecs[0], vecs[1]) for name, vecs in pairs_raw.items()}
        cal = agreement_mod.calibration_report(pairs)
        reporting.write_csv(cal.as_rows(), out_dir / "calibration.csv")
        written.append("calibration.csv")

    if not written:
        raise click.ClickException(f"nothing to report on under {ws.root}")
    click.echo(f"wrote {', '.join(written)} under {out_dir}")


@main.command()
@click.option("--workspace", "workspace_dir", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8077, show_default=True)
@_common
def serve(workspace_dir, host, port, config_path, seed, out_path):
    """Run the annotation HTTP service."""
    import uvicorn

    from .api import create_app

    cfg = _load_cfg(config_path)
    ws = _workspace(cfg, workspace_dir)
    uvicorn.run(create_app(ws), host=host, port=port, log_level="warning")


@main.command("sample-size")
@click.option("--confidence", type=float, default=0.95, show_default=True)
@click.option("--margin", type=float, default=0.05, show_default=True)
@click.option("--proportion", "p", type=float, default=0.5, show_default=True)
@_common
def sample_size_cmd(confidence, margin, p, config_path, seed, out_path):
    """Validation sample size for a confidence level and error margin."""
    try:
        click.echo(sample_size(confidence, margin, p))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc


if __name__ == "__main__":
    main(prog_name="scidebt")
