"""Seeded synthetic corpora for harness runs and experiments.

Each class owns a small word pool with limited overlap, so a trained model
separates the classes well enough for selection thresholds to bite while
staying fully deterministic under one seed.
"""

from __future__ import annotations

import random

from .datastore import Dataset, LabeledInstance, Origin, SatdClass
from .ingest import ArtifactKind
from .normalize import NormalizedInstance, content_hash

CLASS_POOLS: dict[SatdClass, list[str]] = {
    SatdClass.REQUIREMENT_DEBT: [
        "todo", "implement", "later", "missing", "feature", "support", "pending",
    ],
    SatdClass.CODE_DESIGN_DEBT: [
        "hack", "ugly", "refactor", "workaround", "messy", "cleanup", "kludge",
    ],
    SatdClass.DOCUMENTATION_DEBT: [
        "document", "docs", "explain", "readme", "undocumented", "outdated",
    ],
    SatdClass.TEST_DEBT: [
        "test", "coverage", "flaky", "assert", "untested", "suite",
    ],
    SatdClass.SCIENTIFIC_DEBT: [
        "assume", "approximation", "accuracy", "tolerance", "solver",
        "converge", "physics", "estimate",
    ],
    SatdClass.NON_DEBT: [
        "fix", "typo", "update", "bump", "version", "merge", "release",
    ],
}

SHARED_POOL = ["the", "this", "we", "in", "code", "value", "now", "for"]

DEFAULT_COUNTS: dict[SatdClass, int] = {
    SatdClass.REQUIREMENT_DEBT: 90,
    SatdClass.CODE_DESIGN_DEBT: 110,
    SatdClass.DOCUMENTATION_DEBT: 80,
    SatdClass.TEST_DEBT: 80,
    SatdClass.SCIENTIFIC_DEBT: 80,
    SatdClass.NON_DEBT: 160,
}


def _text_for(cls: SatdClass, rng: random.Random) -> str:
    words = rng.sample(CLASS_POOLS[cls], 3) + rng.sample(SHARED_POOL, 2)
    rng.shuffle(words)
    if rng.random() < 0.15:
        words[-1] += rng.choice(["!", "?"])
    return " ".join(words)


def synthetic_dataset(
    counts: dict[SatdClass, int] | None = None, seed: int = 0
) -> Dataset:
    """Labeled corpus with exact per-class counts, kinds rotating CC/CM/IS/PR."""
    counts = counts or DEFAULT_COUNTS
    rng = random.Random(seed)
    kinds = list(ArtifactKind)
    instances: list[LabeledInstance] = []
    serial = 0
    for cls in SatdClass:
        for _ in range(counts.get(cls, 0)):
            instances.append(
                LabeledInstance(
                    instance_id=f"syn-{serial:05d}",
                    kind=kinds[serial % len(kinds)],
                    text=_text_for(cls, rng),
                    label=cls,
                    annotator="synthetic",
                    round=0,
                    origin=Origin.CASS_MANUAL,
                )
            )
            serial += 1
    return Dataset.build(instances, lineage=[f"synthetic-seed{seed}"])


def synthetic_instances(n: int, seed: int = 0, tag: str = "pool") -> list[NormalizedInstance]:
    """Unlabeled instances drawn from all class pools, for loop experiments."""
    rng = random.Random(seed)
    kinds = list(ArtifactKind)
    classes = list(SatdClass)
    out: list[NormalizedInstance] = []
    for i in range(n):
        cls = classes[rng.randrange(len(classes))]
        text = _text_for(cls, rng)
        out.append(
            NormalizedInstance(
                instance_id=f"{tag}-{i:05d}",
                kind=kinds[i % len(kinds)],
                text=text,
                content_hash=content_hash(text),
                provenance={"project": tag, "locator": f"synthetic-{i}"},
            )
        )
    return out
