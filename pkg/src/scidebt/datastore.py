"""Labeled-instance persistence, distributions, folds, and sample sizes.

The store is an append-only JSONL file with a side manifest carrying
counts, lineage, and a content hash, so a round's dataset snapshot can be
referenced by hash. One writer appends; readers work on snapshots.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import random
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .ingest import ArtifactKind
from .normalize import NormalizedInstance

_TEXT_OK = re.compile(r"[a-z ?!]+")


class SatdClass(enum.Enum):
    # Declaration order is the report row order and the prediction
    # tie-break order.
    REQUIREMENT_DEBT = "requirement_debt"
    CODE_DESIGN_DEBT = "code_design_debt"
    DOCUMENTATION_DEBT = "documentation_debt"
    TEST_DEBT = "test_debt"
    SCIENTIFIC_DEBT = "scientific_debt"
    NON_DEBT = "non_debt"


class ScientificDebtIndicator(enum.Enum):
    TRANSLATION_CHALLENGE = "translation_challenge"
    ASSUMPTION = "assumption"
    MISSING_EDGE_CASE = "missing_edge_case"
    COMPUTATIONAL_ACCURACY = "computational_accuracy"
    NEW_SCIENTIFIC_FINDING = "new_scientific_finding"


class Origin(enum.Enum):
    SATDAUG = "satdaug"
    CPP_SATD = "cpp_satd"
    AWON = "awon"
    CASS_MANUAL = "cass_manual"
    PSEUDO_LABEL_VERIFIED = "pseudo_label_verified"


def text_is_normalized(text: str) -> bool:
    return (
        bool(text)
        and _TEXT_OK.fullmatch(text) is not None
        and text == text.strip()
        and "  " not in text
    )


@dataclass(frozen=True)
class LabeledInstance:
    instance_id: str
    kind: ArtifactKind
    text: str
    label: SatdClass
    annotator: str
    round: int
    origin: Origin
    indicator: ScientificDebtIndicator | None = None

    def __post_init__(self):
        if self.indicator is not None and self.label is not SatdClass.SCIENTIFIC_DEBT:
            raise ValueError(
                f"{self.instance_id}: indicator only valid with scientific_debt, "
                f"got label {self.label.value}"
            )
        if self.round < 0:
            raise ValueError(f"{self.instance_id}: round must be non-negative")
        if not self.annotator:
            raise ValueError(f"{self.instance_id}: annotator must be nonempty")

    def as_dict(self) -> dict:
        out = {
            "instance_id": self.instance_id,
            "kind": self.kind.value,
            "text": self.text,
            "label": self.label.value,
            "annotator": self.annotator,
            "round": self.round,
            "origin": self.origin.value,
        }
        if self.indicator is not None:
            out["indicator"] = self.indicator.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LabeledInstance":
        return cls(
            instance_id=data["instance_id"],
            kind=ArtifactKind(data["kind"]),
            text=data["text"],
            label=SatdClass(data["label"]),
            annotator=data["annotator"],
            round=int(data["round"]),
            origin=Origin(data["origin"]),
            indicator=ScientificDebtIndicator(data["indicator"])
            if data.get("indicator")
            else None,
        )

    @classmethod
    def from_normalized(
        cls,
        instance: NormalizedInstance,
        label: SatdClass,
        annotator: str,
        round: int,
        origin: Origin,
        indicator: ScientificDebtIndicator | None = None,
    ) -> "LabeledInstance":
        return cls(
            instance_id=instance.instance_id,
            kind=instance.kind,
            text=instance.text,
            label=label,
            annotator=annotator,
            round=round,
            origin=origin,
            indicator=indicator,
        )


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class Dataset:
    instances: list[LabeledInstance]
    created_at: str = field(default_factory=_utcnow)
    lineage: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.instances)

    @classmethod
    def build(
        cls,
        instances: list[LabeledInstance],
        lineage: list[str] | None = None,
        created_at: str | None = None,
    ) -> "Dataset":
        seen: set[str] = set()
        for inst in instances:
            if inst.instance_id in seen:
                raise ValueError(f"duplicate instance_id {inst.instance_id}")
            seen.add(inst.instance_id)
            if not text_is_normalized(inst.text):
                raise ValueError(f"{inst.instance_id}: text violates normalized alphabet")
        return cls(
            instances=list(instances),
            created_at=created_at or _utcnow(),
            lineage=list(lineage or []),
        )


class MergeConflictError(ValueError):
    def __init__(self, ids: list[str]):
        self.ids = ids
        super().__init__(f"conflicting labels for instance ids: {', '.join(ids)}")


def merge(datasets: list[Dataset]) -> Dataset:
    """Union of datasets with instance_id collision checks.

    Identical-id instances with the same label collapse to the first copy;
    differing labels raise a conflict listing every offending id. Lineage
    tags concatenate in input order.
    """
    by_id: dict[str, LabeledInstance] = {}
    conflicts: list[str] = []
    lineage: list[str] = []
    for ds in datasets:
        lineage.extend(ds.lineage)
        for inst in ds.instances:
            prev = by_id.get(inst.instance_id)
            if prev is None:
                by_id[inst.instance_id] = inst
            elif prev.label is not inst.label:
                if inst.instance_id not in conflicts:
                    conflicts.append(inst.instance_id)
    if conflicts:
        raise MergeConflictError(conflicts)
    return Dataset.build(list(by_id.values()), lineage=lineage)


@dataclass
class DistributionTable:
    """Class-by-kind count table with row and column totals."""

    counts: dict[SatdClass, dict[ArtifactKind, int]]

    def cell(self, cls: SatdClass, kind: ArtifactKind) -> int:
        return self.counts[cls][kind]

    def row_total(self, cls: SatdClass) -> int:
        return sum(self.counts[cls].values())

    def column_total(self, kind: ArtifactKind) -> int:
        return sum(row[kind] for row in self.counts.values())

    def grand_total(self) -> int:
        return sum(self.row_total(c) for c in SatdClass)

    def as_rows(self) -> list[list]:
        header = ["class"] + [k.value for k in ArtifactKind] + ["total"]
        rows: list[list] = [header]
        for cls in SatdClass:
            rows.append(
                [cls.value]
                + [self.counts[cls][k] for k in ArtifactKind]
                + [self.row_total(cls)]
            )
        rows.append(
            ["total"] + [self.column_total(k) for k in ArtifactKind] + [self.grand_total()]
        )
        return rows


def distribution(dataset: Dataset) -> DistributionTable:
    counts = {cls: {kind: 0 for kind in ArtifactKind} for cls in SatdClass}
    for inst in dataset.instances:
        counts[inst.label][inst.kind] += 1
    return DistributionTable(counts=counts)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: dict[str, int]
    stratification_key: tuple[str, str] = ("kind", "label")

    def fold_ids(self, fold: int) -> list[str]:
        return sorted(i for i, f in self.assignment.items() if f == fold)


def stratified_folds(dataset: Dataset, k: int, seed: int) -> FoldPlan:
    """Deterministic stratified fold assignment.

    Instances are grouped by (kind, label); each cell is shuffled and dealt
    round-robin, with the dealing position carried across cells so overall
    fold sizes stay balanced too. Per-cell imbalance never exceeds 1.
    """
    if k < 2:
        raise ValueError(f"fold count must be at least 2, got {k}")
    if k > len(dataset.instances):
        raise ValueError(f"fold count {k} exceeds dataset size {len(dataset.instances)}")
    cells: dict[tuple[str, str], list[str]] = {}
    for inst in dataset.instances:
        cells.setdefault((inst.kind.value, inst.label.value), []).append(inst.instance_id)
    rng = random.Random(seed)
    assignment: dict[str, int] = {}
    offset = 0
    for key in sorted(cells):
        ids = sorted(cells[key])
        rng.shuffle(ids)
        for i, instance_id in enumerate(ids):
            assignment[instance_id] = (offset + i) % k
        offset = (offset + len(ids)) % k
    return FoldPlan(k=k, assignment=assignment)


def split_by_fold(
    dataset: Dataset, plan: FoldPlan, fold: int
) -> tuple[list[LabeledInstance], list[LabeledInstance]]:
    """(train, test) partition for one fold of a plan."""
    train, test = [], []
    for inst in dataset.instances:
        (test if plan.assignment[inst.instance_id] == fold else train).append(inst)
    return train, test


_Z_TABLE = {0.90: 1.645, 0.95: 1.960, 0.99: 2.576}


def sample_size(confidence: float, margin: float, p: float = 0.5) -> int:
    """Statistical sample size, rounded half-up, no population correction."""
    z = _Z_TABLE.get(round(confidence, 2))
    if z is None:
        raise ValueError(f"confidence must be one of {sorted(_Z_TABLE)}, got {confidence}")
    if margin <= 0 or margin > 1:
        raise ValueError(f"margin must be in (0, 1], got {margin}")
    if not 0 < p < 1:
        raise ValueError(f"p must be in (0, 1), got {p}")
    return math.floor(z * z * p * (1 - p) / (margin * margin) + 0.5)


def dataset_to_jsonl(dataset: Dataset, path: str | Path) -> str:
    """Write a dataset as JSONL plus a side manifest; returns the snapshot hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for inst in dataset.instances:
            fh.write(json.dumps(inst.as_dict(), sort_keys=True) + "\n")
    return write_manifest(path, dataset.lineage)


def append_to_jsonl(path: str | Path, delta: list[LabeledInstance], lineage: list[str]) -> str:
    """Append labeled instances to the store; returns the new snapshot hash."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        for inst in delta:
            fh.write(json.dumps(inst.as_dict(), sort_keys=True) + "\n")
    return write_manifest(path, lineage)


def load_jsonl(path: str | Path, lineage_tag: str | None = None) -> Dataset:
    path = Path(path)
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                instances.append(LabeledInstance.from_dict(json.loads(line)))
    manifest = read_manifest(path)
    lineage = manifest.get("lineage") if manifest else None
    if lineage is None:
        lineage = [lineage_tag or path.stem]
    return Dataset.build(instances, lineage=lineage)


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def snapshot_hash(path: str | Path) -> str:
    digest = hashlib.blake2b(Path(path).read_bytes(), digest_size=8)
    return digest.hexdigest()


def write_manifest(path: str | Path, lineage: list[str]) -> str:
    path = Path(path)
    dataset = load_counts(path)
    content = {
        "count": dataset["count"],
        "by_label": dataset["by_label"],
        "lineage": list(lineage),
        "hash": snapshot_hash(path),
        "updated_at": _utcnow(),
    }
    tmp = _manifest_path(path).with_suffix(".tmp")
    tmp.write_text(json.dumps(content, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(_manifest_path(path))
    return content["hash"]


def read_manifest(path: str | Path) -> dict | None:
    mpath = _manifest_path(Path(path))
    if not mpath.exists():
        return None
    return json.loads(mpath.read_text(encoding="utf-8"))


def load_counts(path: Path) -> dict:
    count = 0
    by_label: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            count += 1
            by_label[rec["label"]] = by_label.get(rec["label"], 0) + 1
    return {"count": count, "by_label": by_label}
