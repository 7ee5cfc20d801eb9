"""Corpus ingestion: repository selection and raw artifact extraction.

Four artifact kinds feed the corpus: source code comments, commit messages,
issue sections, and pull request sections. Extraction here is purely
lexical; nothing in this module normalizes text.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .config import CommentSyntax, SelectionCriteria


class ArtifactKind(enum.Enum):
    # Declaration order is the report column order (CC, CM, IS, PR).
    CODE_COMMENT = "code_comment"
    COMMIT_MESSAGE = "commit_message"
    ISSUE_SECTION = "issue_section"
    PULL_REQUEST_SECTION = "pull_request_section"


class SectionRole(enum.Enum):
    TITLE = "title"
    DESCRIPTION = "description"
    COMMENT = "comment"


@dataclass(frozen=True)
class RepoMeta:
    """Candidate repository facts, durations already resolved to days."""

    name: str
    commit_count: int
    contributor_count: int
    age_days: int
    star_count: int
    days_since_last_commit: int
    is_public: bool


@dataclass(frozen=True)
class RawArtifact:
    """One extracted text unit, body verbatim from the source."""

    project: str
    kind: ArtifactKind
    locator: str
    body: str
    author: str | None = None
    author_is_bot: bool = False
    timestamp: str | None = None
    source_language: str | None = None
    section_role: SectionRole | None = None

    @property
    def id(self) -> str:
        return f"{self.project}/{self.kind.value}/{self.locator}"

    def as_dict(self) -> dict:
        out = {
            "project": self.project,
            "kind": self.kind.value,
            "locator": self.locator,
            "body": self.body,
        }
        if self.author is not None:
            out["author"] = self.author
        if self.author_is_bot:
            out["author_is_bot"] = True
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        if self.source_language is not None:
            out["source_language"] = self.source_language
        if self.section_role is not None:
            out["section_role"] = self.section_role.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RawArtifact":
        return cls(
            project=data["project"],
            kind=ArtifactKind(data["kind"]),
            locator=data["locator"],
            body=data["body"],
            author=data.get("author"),
            author_is_bot=bool(data.get("author_is_bot", False)),
            timestamp=data.get("timestamp"),
            source_language=data.get("source_language"),
            section_role=SectionRole(data["section_role"])
            if data.get("section_role")
            else None,
        )


def filter_repositories(
    candidates: list[RepoMeta], criteria: SelectionCriteria
) -> list[RepoMeta]:
    """Keep candidates meeting every selection threshold, order preserved.

    Thresholds are inclusive: a repo sitting exactly on a limit passes.
    """
    kept = []
    for repo in candidates:
        if criteria.require_public and not repo.is_public:
            continue
        if repo.days_since_last_commit > criteria.max_days_since_last_commit:
            continue
        if repo.commit_count < criteria.min_commits:
            continue
        if repo.contributor_count < criteria.min_contributors:
            continue
        if repo.age_days < criteria.min_age_days:
            continue
        if repo.star_count < criteria.min_stars:
            continue
        kept.append(repo)
    return kept


class UnsupportedSyntaxError(ValueError):
    pass


@dataclass
class _PendingRun:
    start: int
    end: int
    lines: list[str] = field(default_factory=list)


def extract_comments(
    file_text: str,
    source_language: str,
    syntaxes: dict[str, CommentSyntax],
    project: str = "",
    path: str = "",
) -> list[RawArtifact]:
    """Extract comment units from one source file.

    Consecutive full-line line comments merge into a single unit; a comment
    trailing code on the same line is its own unit. Block comments are one
    unit each, delimiters kept verbatim. String state is tracked per line
    for ' and " so delimiters inside literals do not open comments; strings
    are assumed not to span lines, block comments may.
    """
    if source_language not in syntaxes:
        raise UnsupportedSyntaxError(f"no comment-syntax profile for {source_language!r}")
    syntax = syntaxes[source_language]
    lines = file_text.splitlines()
    units: list[RawArtifact] = []
    run: _PendingRun | None = None

    def emit(start: int, end: int, text: str):
        units.append(
            RawArtifact(
                project=project,
                kind=ArtifactKind.CODE_COMMENT,
                locator=f"{path}:{start}-{end}",
                body=text,
                source_language=source_language,
            )
        )

    def flush_run():
        nonlocal run
        if run is not None:
            emit(run.start, run.end, "\n".join(run.lines))
            run = None

    in_block = False
    block_close = ""
    block_start_line = 0
    block_lines: list[str] = []

    for lineno, line in enumerate(lines, start=1):
        i = 0
        in_string = False
        quote = ""
        saw_code = False
        line_consumed = False

        if in_block:
            close_at = line.find(block_close)
            if close_at < 0:
                block_lines.append(line)
                continue
            block_lines.append(line[: close_at + len(block_close)])
            emit(block_start_line, lineno, "\n".join(block_lines))
            in_block = False
            block_lines = []
            i = close_at + len(block_close)
            saw_code = True

        while i < len(line) and not line_consumed:
            ch = line[i]
            if in_string:
                if ch == "\\":
                    i += 2
                    continue
                if ch == quote:
                    in_string = False
                i += 1
                continue
            matched_block = False
            for opener, closer in syntax.blocks:
                if line.startswith(opener, i):
                    flush_run()
                    close_at = line.find(closer, i + len(opener))
                    if close_at >= 0:
                        emit(lineno, lineno, line[i : close_at + len(closer)])
                        i = close_at + len(closer)
                        saw_code = True
                    else:
                        in_block = True
                        block_close = closer
                        block_start_line = lineno
                        block_lines = [line[i:]]
                        line_consumed = True
                    matched_block = True
                    break
            if matched_block:
                continue
            matched_prefix = None
            for prefix in syntax.line_prefixes:
                if line.startswith(prefix, i):
                    matched_prefix = prefix
                    break
            if matched_prefix is not None:
                body = line[i:]
                if saw_code:
                    flush_run()
                    emit(lineno, lineno, body)
                elif run is not None and run.end == lineno - 1:
                    run.lines.append(body)
                    run.end = lineno
                else:
                    flush_run()
                    run = _PendingRun(start=lineno, end=lineno, lines=[body])
                line_consumed = True
                continue
            if ch in ("'", '"'):
                in_string = True
                quote = ch
                saw_code = True
            elif not ch.isspace():
                saw_code = True
            i += 1

        if not line_consumed and run is not None and run.end != lineno:
            # Any non-comment line, blank included, breaks a run.
            flush_run()

    if in_block:
        # Unterminated block: keep what was captured rather than dropping it.
        emit(block_start_line, len(lines), "\n".join(block_lines))
    flush_run()
    units.sort(key=lambda u: int(u.locator.rsplit(":", 1)[1].split("-")[0]))
    return units


def extract_commit_messages(
    log_stream, project: str = ""
) -> tuple[list[RawArtifact], int]:
    """Turn commit log records into artifacts.

    Records are (hash, author, timestamp, message) tuples or dicts with keys
    sha/author/authored_at/message. Empty messages are skipped and tallied.
    """
    out: list[RawArtifact] = []
    skipped = 0
    for rec in log_stream:
        if isinstance(rec, dict):
            sha = rec.get("sha") or rec.get("hash")
            author = rec.get("author")
            timestamp = rec.get("authored_at") or rec.get("timestamp")
            message = rec.get("message")
        else:
            sha, author, timestamp, message = rec
        if not sha:
            raise ValueError("commit record is missing its hash")
        if message is None or not str(message).strip():
            skipped += 1
            continue
        out.append(
            RawArtifact(
                project=project,
                kind=ArtifactKind.COMMIT_MESSAGE,
                locator=str(sha),
                body=str(message),
                author=author,
                timestamp=timestamp,
            )
        )
    return out, skipped


def ingest_issue_or_pr(record: dict, project: str = "") -> list[RawArtifact]:
    """Split one issue/PR archive record into title/description/comments.

    Empty or whitespace-only sections are dropped; a record with no usable
    section yields an empty list (the document is discarded). Comment
    locators are 1-based in thread order.
    """
    for required in ("number", "title"):
        if required not in record:
            raise ValueError(f"issue/PR record is missing field {required!r}")
    is_pr = bool(record.get("is_pull_request"))
    kind = ArtifactKind.PULL_REQUEST_SECTION if is_pr else ArtifactKind.ISSUE_SECTION
    prefix = "pr" if is_pr else "issue"
    number = record["number"]
    out: list[RawArtifact] = []

    def add(role: SectionRole, tail: str, text, author, created_at):
        if text is None or not str(text).strip():
            return
        out.append(
            RawArtifact(
                project=project,
                kind=kind,
                locator=f"{prefix}-{number}/{tail}",
                body=str(text),
                author=author,
                timestamp=created_at,
                section_role=role,
            )
        )

    add(SectionRole.TITLE, "title", record["title"], record.get("author"), record.get("created_at"))
    add(
        SectionRole.DESCRIPTION,
        "description",
        record.get("body"),
        record.get("author"),
        record.get("created_at"),
    )
    for idx, comment in enumerate(record.get("comments", []), start=1):
        if "author" not in comment:
            raise ValueError(f"comment {idx} on {prefix}-{number} is missing field 'author'")
        add(
            SectionRole.COMMENT,
            f"comment-{idx}",
            comment.get("body"),
            comment["author"],
            comment.get("created_at"),
        )
    return out


def load_issue_archive(path: str | Path, project: str = "") -> list[RawArtifact]:
    """Read a JSON or JSONL issue/PR archive and ingest every record."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        records = json.loads(text)
    else:
        records = [json.loads(line) for line in text.splitlines() if line.strip()]
    out: list[RawArtifact] = []
    for rec in records:
        out.extend(ingest_issue_or_pr(rec, project))
    return out


def filter_bots(artifacts: list[RawArtifact], bot_names: list[str]) -> list[RawArtifact]:
    """Remove artifacts authored by a listed bot account.

    Matching is case-insensitive exact on the author name; artifacts with
    no author are kept. Idempotent.
    """
    bots = {name.lower() for name in bot_names}
    return [
        a for a in artifacts if a.author is None or a.author.lower() not in bots
    ]


def draw_inspection_sample(instances: list, n: int, seed: int) -> list:
    """Seeded uniform sample without replacement.

    With n equal to the population size the result is a deterministic
    permutation of the input.
    """
    if n > len(instances):
        raise ValueError(f"sample size {n} exceeds population {len(instances)}")
    return random.Random(seed).sample(instances, n)
