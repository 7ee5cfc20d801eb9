"""Shared-vocabulary multinomial naive Bayes with per-artifact-kind heads.

Every head mixes its own Laplace-smoothed statistics with statistics pooled
across all kinds, weighted by an interpolation constant: weight 1 makes
heads fully local, weight 0 makes every head score-identical to a single
pooled model. Priors interpolate the same way, so the endpoints hold for
whole predictions, not just token terms. All computation is log-space.

Trained parameters are immutable and safe to share across threads; the
on-disk format is a versioned magic line plus canonical JSON so retraining
on the same snapshot reproduces the file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .datastore import Dataset, LabeledInstance, SatdClass, split_by_fold, stratified_folds
from .ingest import ArtifactKind
from .normalize import NormalizedInstance

log = logging.getLogger(__name__)

MODEL_MAGIC = "scidebt-nb-model v1"

_TOKEN = re.compile(r"[a-z]+|[?!]")


def tokenize(text: str) -> list[str]:
    """Split normalized text into word tokens; ? and ! stand alone."""
    return _TOKEN.findall(text)


@dataclass(frozen=True)
class HeadBlock:
    """Log-space parameters for one head: priors and per-class token rows.

    Each likelihood row has vocabulary-size + 1 entries; the last entry is
    the smoothed unseen-token mass.
    """

    log_priors: dict[SatdClass, float]
    log_likelihoods: dict[SatdClass, tuple[float, ...]]


@dataclass(frozen=True)
class ModelParams:
    vocabulary: dict[str, int]
    alpha: float
    lam: float
    trained_classes: tuple[SatdClass, ...]
    heads: dict[ArtifactKind, HeadBlock]
    pooled: HeadBlock


@dataclass(frozen=True)
class Prediction:
    instance_id: str
    scores: dict[SatdClass, float]
    predicted: SatdClass
    confidence: float
    margin: float

    def as_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "scores": {c.value: s for c, s in self.scores.items()},
            "predicted": self.predicted.value,
            "confidence": self.confidence,
            "margin": self.margin,
        }


class _Stats:
    """Raw counts for one slice of the training data."""

    def __init__(self):
        self.doc_counts: Counter = Counter()
        self.token_counts: dict[SatdClass, Counter] = {}
        self.token_totals: Counter = Counter()
        self.total_docs = 0

    def add(self, label: SatdClass, tokens: list[str]):
        self.doc_counts[label] += 1
        self.total_docs += 1
        bucket = self.token_counts.setdefault(label, Counter())
        for tok in tokens:
            bucket[tok] += 1
        self.token_totals[label] += len(tokens)


def _estimates(
    stats: _Stats, classes: list[SatdClass], vocab: dict[str, int], alpha: float
) -> tuple[dict[SatdClass, float], dict[SatdClass, list[float]]]:
    """Laplace-smoothed priors and token rows (vocab + unseen bucket)."""
    width = len(vocab) + 1
    priors: dict[SatdClass, float] = {}
    rows: dict[SatdClass, list[float]] = {}
    for cls in classes:
        priors[cls] = stats.doc_counts[cls] / stats.total_docs if stats.total_docs else 0.0
        denom = stats.token_totals[cls] + alpha * width
        counts = stats.token_counts.get(cls, Counter())
        row = [alpha / denom] * width
        for tok, count in counts.items():
            row[vocab[tok]] = (count + alpha) / denom
        rows[cls] = row
    return priors, rows


def _log_block(
    priors: dict[SatdClass, float], rows: dict[SatdClass, list[float]]
) -> HeadBlock:
    return HeadBlock(
        log_priors={c: (math.log(p) if p > 0 else -math.inf) for c, p in priors.items()},
        log_likelihoods={c: tuple(math.log(p) for p in row) for c, row in rows.items()},
    )


def train(
    dataset: Dataset | list[LabeledInstance],
    alpha: float = 1.0,
    lam: float = 0.5,
    exclude: frozenset[SatdClass] | set[SatdClass] = frozenset(),
) -> ModelParams:
    """Fit the interpolated per-head model on a labeled dataset.

    Heads exist for every artifact kind present in the (post-exclusion)
    training data; a kind with zero instances gets no head and falls back
    to the pooled block at prediction time.
    """
    instances = dataset.instances if isinstance(dataset, Dataset) else dataset
    instances = [i for i in instances if i.label not in exclude]
    if not instances:
        raise ValueError("no training instances left after exclusion")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"interpolation weight must be in [0, 1], got {lam}")

    classes = [c for c in SatdClass if any(i.label is c for i in instances)]
    tokens_by_id = {i.instance_id: tokenize(i.text) for i in instances}
    vocab = {tok: idx for idx, tok in enumerate(sorted({t for toks in tokens_by_id.values() for t in toks}))}

    pooled_stats = _Stats()
    head_stats: dict[ArtifactKind, _Stats] = {}
    for inst in instances:
        toks = tokens_by_id[inst.instance_id]
        pooled_stats.add(inst.label, toks)
        head_stats.setdefault(inst.kind, _Stats()).add(inst.label, toks)

    pooled_priors, pooled_rows = _estimates(pooled_stats, classes, vocab, alpha)
    heads: dict[ArtifactKind, HeadBlock] = {}
    for kind in ArtifactKind:
        stats = head_stats.get(kind)
        if stats is None:
            continue
        local_priors, local_rows = _estimates(stats, classes, vocab, alpha)
        priors = {c: lam * local_priors[c] + (1 - lam) * pooled_priors[c] for c in classes}
        rows = {
            c: [lam * a + (1 - lam) * b for a, b in zip(local_rows[c], pooled_rows[c])]
            for c in classes
        }
        heads[kind] = _log_block(priors, rows)
    missing = [k.value for k in ArtifactKind if k not in heads]
    if missing:
        log.warning("no training instances for %s; pooled fallback will serve them", missing)

    return ModelParams(
        vocabulary=vocab,
        alpha=alpha,
        lam=lam,
        trained_classes=tuple(classes),
        heads=heads,
        pooled=_log_block(pooled_priors, pooled_rows),
    )


def predict_text(
    params: ModelParams, text: str, kind: ArtifactKind, instance_id: str = ""
) -> Prediction:
    block = params.heads.get(kind, params.pooled)
    unseen = len(params.vocabulary)
    token_ids = [params.vocabulary.get(tok, unseen) for tok in tokenize(text)]
    log_scores: dict[SatdClass, float] = {}
    for cls in params.trained_classes:
        total = block.log_priors[cls]
        if total != -math.inf:
            row = block.log_likelihoods[cls]
            for tid in token_ids:
                total += row[tid]
        log_scores[cls] = total
    peak = max(log_scores.values())
    raw = {c: math.exp(s - peak) for c, s in log_scores.items()}
    norm = sum(raw.values())
    scores = {c: v / norm for c, v in raw.items()}
    predicted = None
    best = -1.0
    for cls in params.trained_classes:
        if scores[cls] > best:
            best = scores[cls]
            predicted = cls
    runner_up = max((v for c, v in scores.items() if c is not predicted), default=0.0)
    return Prediction(
        instance_id=instance_id,
        scores=scores,
        predicted=predicted,
        confidence=best,
        margin=best - runner_up,
    )


def predict(params: ModelParams, instance: NormalizedInstance) -> Prediction:
    return predict_text(params, instance.text, instance.kind, instance.instance_id)


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[SatdClass, dict[str, float]]
    macro_f1: float
    accuracy: float
    confusion: dict[SatdClass, dict[SatdClass, int]]

    def as_dict(self) -> dict:
        return {
            "per_class": {
                c.value: dict(metrics) for c, metrics in self.per_class.items()
            },
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "confusion": {
                t.value: {p.value: n for p, n in row.items()}
                for t, row in self.confusion.items()
            },
        }


def metrics_from_confusion(confusion: dict[SatdClass, dict[SatdClass, int]]) -> MetricsReport:
    """Derive the full report from a true-by-predicted count matrix."""
    total = sum(sum(row.values()) for row in confusion.values())
    correct = sum(confusion[c][c] for c in SatdClass)
    present = [
        c
        for c in SatdClass
        if sum(confusion[c].values()) > 0 or sum(confusion[t][c] for t in SatdClass) > 0
    ]
    per_class: dict[SatdClass, dict[str, float]] = {}
    for cls in present:
        tp = confusion[cls][cls]
        fp = sum(confusion[t][cls] for t in SatdClass) - tp
        fn = sum(confusion[cls].values()) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {"precision": precision, "recall": recall, "f1": f1}
    macro = sum(m["f1"] for m in per_class.values()) / len(per_class) if per_class else 0.0
    return MetricsReport(
        per_class=per_class,
        macro_f1=macro,
        accuracy=correct / total if total else 0.0,
        confusion=confusion,
    )


def evaluate(params: ModelParams, test: Dataset | list[LabeledInstance]) -> MetricsReport:
    instances = test.instances if isinstance(test, Dataset) else test
    if not instances:
        raise ValueError("empty test set")
    confusion = {t: {p: 0 for p in SatdClass} for t in SatdClass}
    for inst in instances:
        pred = predict_text(params, inst.text, inst.kind, inst.instance_id)
        confusion[inst.label][pred.predicted] += 1
    return metrics_from_confusion(confusion)


@dataclass(frozen=True)
class CrossValReport:
    folds: list[MetricsReport]
    mean: dict[str, float]
    min: dict[str, float]
    max: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "folds": [f.as_dict() for f in self.folds],
            "mean": dict(self.mean),
            "min": dict(self.min),
            "max": dict(self.max),
        }


def cross_validate(
    dataset: Dataset, k: int, seed: int, alpha: float = 1.0, lam: float = 0.5
) -> CrossValReport:
    plan = stratified_folds(dataset, k, seed)
    folds = []
    for fold in range(k):
        train_insts, test_insts = split_by_fold(dataset, plan, fold)
        params = train(train_insts, alpha=alpha, lam=lam)
        folds.append(evaluate(params, test_insts))
    summary = {
        "macro_f1": [f.macro_f1 for f in folds],
        "accuracy": [f.accuracy for f in folds],
    }
    return CrossValReport(
        folds=folds,
        mean={k_: sum(v) / len(v) for k_, v in summary.items()},
        min={k_: min(v) for k_, v in summary.items()},
        max={k_: max(v) for k_, v in summary.items()},
    )


@dataclass(frozen=True)
class GridSearchResult:
    best_alpha: float
    best_lam: float
    table: list[dict]


def grid_search(
    dataset: Dataset,
    alpha_grid: list[float],
    lambda_grid: list[float],
    k: int,
    seed: int,
) -> GridSearchResult:
    """Exhaustive (alpha, lambda) sweep scored by mean cross-validated macro-F1.

    Ties prefer smaller alpha, then larger lambda.
    """
    if not alpha_grid or not lambda_grid:
        raise ValueError("grids must be nonempty")
    table = []
    for alpha in alpha_grid:
        for lam in lambda_grid:
            report = cross_validate(dataset, k, seed, alpha=alpha, lam=lam)
            table.append(
                {
                    "alpha": alpha,
                    "lambda": lam,
                    "macro_f1": report.mean["macro_f1"],
                    "accuracy": report.mean["accuracy"],
                }
            )
    best = max(table, key=lambda row: (row["macro_f1"], -row["alpha"], row["lambda"]))
    return GridSearchResult(best_alpha=best["alpha"], best_lam=best["lambda"], table=table)


@dataclass(frozen=True)
class ExclusionReport:
    """Predicted-label counts over held-out instances of the excluded class."""

    excluded: SatdClass
    counts: list[tuple[SatdClass, int]]
    total: int

    def as_rows(self) -> list[list]:
        rows = [["predicted_class", "count"]]
        rows.extend([cls.value, count] for cls, count in self.counts)
        rows.append(["total", self.total])
        return rows


def exclusion_experiment(
    dataset: Dataset, alpha: float = 1.0, lam: float = 0.5
) -> ExclusionReport:
    """Train without scientific_debt, then classify its held-out instances.

    Counts are reported per predicted class, largest first; the excluded
    class can never appear since it is absent from trained_classes.
    """
    held_out = [i for i in dataset.instances if i.label is SatdClass.SCIENTIFIC_DEBT]
    if not held_out:
        raise ValueError("dataset has no scientific_debt instances to hold out")
    params = train(dataset, alpha=alpha, lam=lam, exclude={SatdClass.SCIENTIFIC_DEBT})
    tally: Counter = Counter()
    for inst in held_out:
        pred = predict_text(params, inst.text, inst.kind, inst.instance_id)
        tally[pred.predicted] += 1
    order = {c: i for i, c in enumerate(SatdClass)}
    counts = sorted(tally.items(), key=lambda kv: (-kv[1], order[kv[0]]))
    return ExclusionReport(
        excluded=SatdClass.SCIENTIFIC_DEBT, counts=counts, total=len(held_out)
    )


def head_comparison(
    dataset: Dataset, k: int, seed: int, alpha: float = 1.0, lam: float = 1.0
) -> dict:
    """Multi-head versus pooled single-head macro-F1, same folds.

    The single-head baseline pools artifacts by simple concatenation, which
    is exactly the interpolation weight-0 model. The delta's sign is
    data-dependent; nothing here asserts one.
    """
    multi = cross_validate(dataset, k, seed, alpha=alpha, lam=lam)
    single = cross_validate(dataset, k, seed, alpha=alpha, lam=0.0)
    return {
        "multi_head_macro_f1": multi.mean["macro_f1"],
        "single_head_macro_f1": single.mean["macro_f1"],
        "delta": multi.mean["macro_f1"] - single.mean["macro_f1"],
    }


def _encode_float(value: float):
    return None if value == -math.inf else value


def _decode_float(value) -> float:
    return -math.inf if value is None else float(value)


def save_model(params: ModelParams, path: str | Path) -> str:
    """Write the versioned model file; returns its content hash."""
    vocab_list = [tok for tok, _ in sorted(params.vocabulary.items(), key=lambda kv: kv[1])]
    payload = {
        "alpha": params.alpha,
        "lambda": params.lam,
        "trained_classes": [c.value for c in params.trained_classes],
        "vocabulary": vocab_list,
        "heads": {
            kind.value: _block_payload(block) for kind, block in params.heads.items()
        },
        "pooled": _block_payload(params.pooled),
    }
    body = MODEL_MAGIC + "\n" + json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(body, encoding="utf-8")
    return hashlib.blake2b(body.encode("utf-8"), digest_size=8).hexdigest()


def _block_payload(block: HeadBlock) -> dict:
    return {
        "log_priors": {c.value: _encode_float(v) for c, v in block.log_priors.items()},
        "log_likelihoods": {
            c.value: [_encode_float(v) for v in row]
            for c, row in block.log_likelihoods.items()
        },
    }


def _block_from_payload(data: dict) -> HeadBlock:
    return HeadBlock(
        log_priors={
            SatdClass(c): _decode_float(v) for c, v in data["log_priors"].items()
        },
        log_likelihoods={
            SatdClass(c): tuple(_decode_float(v) for v in row)
            for c, row in data["log_likelihoods"].items()
        },
    )


def load_model(path: str | Path) -> ModelParams:
    text = Path(path).read_text(encoding="utf-8")
    newline = text.find("\n")
    if newline < 0 or text[:newline] != MODEL_MAGIC:
        raise ValueError(f"{path}: not a recognized model file")
    payload = json.loads(text[newline + 1 :])
    return ModelParams(
        vocabulary={tok: idx for idx, tok in enumerate(payload["vocabulary"])},
        alpha=payload["alpha"],
        lam=payload["lambda"],
        trained_classes=tuple(SatdClass(c) for c in payload["trained_classes"]),
        heads={
            ArtifactKind(kind): _block_from_payload(block)
            for kind, block in payload["heads"].items()
        },
        pooled=_block_from_payload(payload["pooled"]),
    )
