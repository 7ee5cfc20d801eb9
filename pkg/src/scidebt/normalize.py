"""Text normalization and corpus-level cleaning.

The pipeline is fixed and order matters: strip comment delimiters, join
lines, lowercase, restrict the alphabet to [a-z ?!], collapse whitespace,
trim. Normalization is idempotent on its own output. Deduplication is
global across artifact kinds, first occurrence wins.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .config import CommentSyntax, syntax_for_path
from .ingest import ArtifactKind, RawArtifact

# Disallowed characters are deleted outright, not padded with spaces, so
# "bug #1234 (30%" reduces to "bug " and "don't" to "dont".
_ALPHABET = re.compile(r"[^a-z ?!]")
_WS = re.compile(r" +")

_KIND_SHORT = {
    ArtifactKind.CODE_COMMENT: "cc",
    ArtifactKind.COMMIT_MESSAGE: "cm",
    ArtifactKind.ISSUE_SECTION: "is",
    ArtifactKind.PULL_REQUEST_SECTION: "pr",
}

_KIND_ORDER = {kind: i for i, kind in enumerate(ArtifactKind)}


@dataclass(frozen=True)
class NormalizedInstance:
    instance_id: str
    kind: ArtifactKind
    text: str
    content_hash: str
    provenance: dict

    def as_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "kind": self.kind.value,
            "text": self.text,
            "content_hash": self.content_hash,
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizedInstance":
        return cls(
            instance_id=data["instance_id"],
            kind=ArtifactKind(data["kind"]),
            text=data["text"],
            content_hash=data["content_hash"],
            provenance=dict(data.get("provenance", {})),
        )


def content_hash(text: str) -> str:
    """64-bit blake2b hex digest; seedless, so hashes agree across machines."""
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


def _strip_delimiters(text: str, syntax: CommentSyntax | None) -> str:
    if syntax is None:
        return text
    lines = []
    for line in text.splitlines():
        stripped = line.lstrip()
        for opener, closer in syntax.blocks:
            if stripped.startswith(opener):
                stripped = stripped[len(opener) :]
            if stripped.rstrip().endswith(closer):
                stripped = stripped.rstrip()[: -len(closer)]
        after = stripped.lstrip()
        for prefix in syntax.line_prefixes:
            # Repeated prefixes (## heading, ---- rule) fall in one pass.
            while after.startswith(prefix):
                after = after[len(prefix) :]
        lines.append(after)
    return "\n".join(lines)


def normalize_text(text: str, syntax: CommentSyntax | None = None) -> str:
    """Apply the normalization pipeline to one artifact body."""
    text = _strip_delimiters(text, syntax)
    text = " ".join(text.splitlines())
    text = text.lower()
    text = _ALPHABET.sub("", text)
    text = _WS.sub(" ", text)
    return text.strip()


def is_license_text(normalized: str, keywords: list[str]) -> bool:
    """License/boilerplate check: substring match against normalized text."""
    return any(kw in normalized for kw in keywords)


def normalize_artifact(
    artifact: RawArtifact,
    syntaxes: dict[str, CommentSyntax],
    license_keywords: list[str] = (),
) -> tuple[NormalizedInstance | None, str | None]:
    """Normalize one artifact.

    Returns (instance, None) on success, or (None, reason) where reason is
    "empty" or "license". Filtering is a value, never an exception.
    """
    syntax = None
    if artifact.kind is ArtifactKind.CODE_COMMENT:
        if artifact.source_language and artifact.source_language in syntaxes:
            syntax = syntaxes[artifact.source_language]
        else:
            syntax = syntax_for_path(artifact.locator.rsplit(":", 1)[0], syntaxes)
    text = normalize_text(artifact.body, syntax)
    if not text:
        return None, "empty"
    if is_license_text(text, license_keywords):
        return None, "license"
    digest = content_hash(text)
    provenance = {"project": artifact.project, "locator": artifact.locator}
    if artifact.author is not None:
        provenance["author"] = artifact.author
    if artifact.timestamp is not None:
        provenance["timestamp"] = artifact.timestamp
    if artifact.section_role is not None:
        provenance["section_role"] = artifact.section_role.value
    return (
        NormalizedInstance(
            instance_id=f"{_KIND_SHORT[artifact.kind]}-{digest}",
            kind=artifact.kind,
            text=text,
            content_hash=digest,
            provenance=provenance,
        ),
        None,
    )


def dedupe(
    instances: list[NormalizedInstance],
) -> tuple[list[NormalizedInstance], dict[str, int]]:
    """Global exact-duplicate removal across all kinds, first-wins.

    Returns kept instances plus a per-kind count of dropped duplicates.
    Input order decides survivors; callers wanting order-independent
    results sort by provenance first (see normalize_corpus).
    """
    seen: set[str] = set()
    kept: list[NormalizedInstance] = []
    dropped: dict[str, int] = {}
    for inst in instances:
        if inst.content_hash in seen:
            dropped[inst.kind.value] = dropped.get(inst.kind.value, 0) + 1
            continue
        seen.add(inst.content_hash)
        kept.append(inst)
    return kept, dropped


@dataclass
class CleaningReport:
    input_count: int = 0
    empty_dropped: int = 0
    license_dropped: int = 0
    duplicates_dropped: dict = field(default_factory=dict)
    kept: int = 0
    kept_by_kind: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "input": self.input_count,
            "empty_dropped": self.empty_dropped,
            "license_dropped": self.license_dropped,
            "duplicates_dropped": dict(self.duplicates_dropped),
            "kept": self.kept,
            "kept_by_kind": dict(self.kept_by_kind),
        }


def normalize_corpus(
    artifacts: list[RawArtifact],
    syntaxes: dict[str, CommentSyntax],
    license_keywords: list[str],
) -> tuple[list[NormalizedInstance], CleaningReport]:
    """Normalize, filter, and dedupe a whole corpus.

    Artifacts are ordered by (project, kind, locator) before dedup so the
    survivor of a duplicate group never depends on input order; kind order
    means a comment outlives a commit message carrying the same text.
    """
    report = CleaningReport(input_count=len(artifacts))
    ordered = sorted(artifacts, key=lambda a: (a.project, _KIND_ORDER[a.kind], a.locator))
    instances: list[NormalizedInstance] = []
    for artifact in ordered:
        inst, reason = normalize_artifact(artifact, syntaxes, license_keywords)
        if inst is None:
            if reason == "license":
                report.license_dropped += 1
            else:
                report.empty_dropped += 1
            continue
        instances.append(inst)
    kept, dropped = dedupe(instances)
    report.duplicates_dropped = dropped
    report.kept = len(kept)
    for inst in kept:
        report.kept_by_kind[inst.kind.value] = report.kept_by_kind.get(inst.kind.value, 0) + 1
    return kept, report
