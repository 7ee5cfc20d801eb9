"""Report figures rendered to files next to the CSV output.

Everything draws through the Agg backend so report generation works on
headless machines.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .datastore import DistributionTable, SatdClass
from .ingest import ArtifactKind
from .model import ExclusionReport
from .reporting import PrevalenceReport

_KIND_LABELS = {
    ArtifactKind.CODE_COMMENT: "code comments",
    ArtifactKind.COMMIT_MESSAGE: "commit messages",
    ArtifactKind.ISSUE_SECTION: "issue sections",
    ArtifactKind.PULL_REQUEST_SECTION: "PR sections",
}

_CLASS_LABELS = {
    SatdClass.REQUIREMENT_DEBT: "requirement",
    SatdClass.CODE_DESIGN_DEBT: "code/design",
    SatdClass.DOCUMENTATION_DEBT: "documentation",
    SatdClass.TEST_DEBT: "test",
    SatdClass.SCIENTIFIC_DEBT: "scientific",
    SatdClass.NON_DEBT: "non-debt",
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def distribution_figure(table: DistributionTable, path: str | Path) -> Path:
    """Grouped bars: labeled-instance counts per class, split by kind."""
    classes = list(SatdClass)
    kinds = list(ArtifactKind)
    width = 0.8 / len(kinds)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for j, kind in enumerate(kinds):
        xs = [i + j * width for i in range(len(classes))]
        ys = [table.cell(c, kind) for c in classes]
        ax.bar(xs, ys, width=width, label=_KIND_LABELS[kind])
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(classes))])
    ax.set_xticklabels([_CLASS_LABELS[c] for c in classes], rotation=20, ha="right")
    ax.set_ylabel("labeled instances")
    ax.set_title("Label distribution by artifact kind")
    ax.legend(fontsize=8)
    return _save(fig, path)


def prevalence_figure(report: PrevalenceReport, path: str | Path) -> Path:
    """Stacked percentage bars: predicted class shares within each kind."""
    kinds = list(ArtifactKind)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    bottoms = [0.0] * len(kinds)
    for cls in SatdClass:
        shares = [report.percentage(k, cls) for k in kinds]
        ax.bar(range(len(kinds)), shares, bottom=bottoms, label=_CLASS_LABELS[cls])
        bottoms = [b + s for b, s in zip(bottoms, shares)]
    ax.set_xticks(range(len(kinds)))
    ax.set_xticklabels([_KIND_LABELS[k] for k in kinds], rotation=15, ha="right")
    ax.set_ylabel("share of predictions (%)")
    ax.set_ylim(0, 100)
    ax.set_title("Predicted class prevalence by artifact kind")
    ax.legend(fontsize=7, ncol=2)
    return _save(fig, path)


def exclusion_figure(report: ExclusionReport, path: str | Path) -> Path:
    """Where held-out instances of the excluded class land."""
    labels = [_CLASS_LABELS[c] for c, _ in report.counts]
    values = [n for _, n in report.counts]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(values)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("held-out instances")
    ax.set_title(f"Predictions for held-out {_CLASS_LABELS[report.excluded]} debt (n={report.total})")
    return _save(fig, path)
