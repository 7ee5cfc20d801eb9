"""Corpus-scale classification and delimited report rendering.

Prevalence cells follow the "count (pp.pp%)" convention with two decimals;
per-kind percentages always sum to 100 within a hundredth, which the tests
hold against an independent recount of the predictions stream.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .datastore import DistributionTable, SatdClass
from .ingest import ArtifactKind
from .model import ModelParams, Prediction, predict
from .normalize import NormalizedInstance


@dataclass
class PrevalenceReport:
    counts: dict[ArtifactKind, dict[SatdClass, int]] = field(
        default_factory=lambda: {k: {c: 0 for c in SatdClass} for k in ArtifactKind}
    )

    def add(self, kind: ArtifactKind, cls: SatdClass, n: int = 1) -> None:
        self.counts[kind][cls] += n

    def kind_total(self, kind: ArtifactKind) -> int:
        return sum(self.counts[kind].values())

    def grand_total(self) -> int:
        return sum(self.kind_total(k) for k in ArtifactKind)

    def percentage(self, kind: ArtifactKind, cls: SatdClass) -> float:
        total = self.kind_total(kind)
        return 100.0 * self.counts[kind][cls] / total if total else 0.0

    def cell_display(self, kind: ArtifactKind, cls: SatdClass) -> str:
        return f"{self.counts[kind][cls]} ({self.percentage(kind, cls):.2f}%)"

    def as_rows(self) -> list[list]:
        header = ["class"] + [k.value for k in ArtifactKind]
        rows: list[list] = [header]
        for cls in SatdClass:
            rows.append([cls.value] + [self.cell_display(k, cls) for k in ArtifactKind])
        rows.append(["total"] + [str(self.kind_total(k)) for k in ArtifactKind])
        return rows

    def as_dict(self) -> dict:
        return {
            kind.value: {
                "total": self.kind_total(kind),
                "classes": {
                    cls.value: {
                        "count": self.counts[kind][cls],
                        "percentage": self.percentage(kind, cls),
                    }
                    for cls in SatdClass
                },
            }
            for kind in ArtifactKind
        }


def classify_corpus(
    params: ModelParams, instances: list[NormalizedInstance]
) -> tuple[list[Prediction], PrevalenceReport]:
    """Classify every instance and aggregate by (kind, predicted class)."""
    report = PrevalenceReport()
    predictions = []
    for inst in instances:
        pred = predict(params, inst)
        predictions.append(pred)
        report.add(inst.kind, pred.predicted)
    return predictions, report


def classify_corpus_to_file(
    params: ModelParams,
    instances,
    out_path: str | Path,
    checkpoint_every: int = 100_000,
) -> PrevalenceReport:
    """Streaming variant: constant memory, predictions land in a JSONL file.

    ``instances`` may be any iterable; a progress line is appended to the
    report file's side log every ``checkpoint_every`` instances.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    report = PrevalenceReport()
    done = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for inst in instances:
            pred = predict(params, inst)
            report.add(inst.kind, pred.predicted)
            fh.write(json.dumps(pred.as_dict(), sort_keys=True) + "\n")
            done += 1
            if done % checkpoint_every == 0:
                _checkpoint(out_path, done)
    return report


def _checkpoint(out_path: Path, done: int) -> None:
    with open(out_path.with_suffix(".progress"), "a", encoding="utf-8") as fh:
        fh.write(f"{done}\n")


def write_csv(rows: list[list], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(rows)


def write_json(data, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def distribution_csv(table: DistributionTable, path: str | Path) -> None:
    write_csv(table.as_rows(), path)


def prevalence_csv(report: PrevalenceReport, path: str | Path) -> None:
    write_csv(report.as_rows(), path)


def load_predictions(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out
