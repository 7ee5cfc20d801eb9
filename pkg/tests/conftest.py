from __future__ import annotations

import sys
from pathlib import Path

import pytest

# oracles.py and golden_pairs.py live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

from scidebt.datastore import LabeledInstance, Origin, SatdClass
from scidebt.ingest import ArtifactKind

TOY = Path(__file__).parent / "data" / "toy"


@pytest.fixture
def toy_root() -> Path:
    return TOY


def make_labeled(
    i: int,
    label: SatdClass,
    text: str,
    kind: ArtifactKind = ArtifactKind.CODE_COMMENT,
    indicator=None,
    annotator: str = "t1",
) -> LabeledInstance:
    return LabeledInstance(
        instance_id=f"x-{i:04d}",
        kind=kind,
        text=text,
        label=label,
        indicator=indicator,
        annotator=annotator,
        origin=Origin.CASS_MANUAL,
        round=0,
    )
