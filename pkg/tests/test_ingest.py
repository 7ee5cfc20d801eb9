from __future__ import annotations

import json

import pytest

from scidebt.config import DEFAULT_SYNTAXES, SelectionCriteria
from scidebt.ingest import (
    ArtifactKind,
    RawArtifact,
    RepoMeta,
    SectionRole,
    UnsupportedSyntaxError,
    draw_inspection_sample,
    extract_comments,
    extract_commit_messages,
    filter_bots,
    filter_repositories,
    ingest_issue_or_pr,
    load_issue_archive,
)


def _repo(**kw) -> RepoMeta:
    base = dict(
        name="r",
        commit_count=10_000,
        contributor_count=20,
        age_days=730,
        star_count=40,
        days_since_last_commit=120,
        is_public=True,
    )
    base.update(kw)
    return RepoMeta(**base)


def test_filter_repositories_thresholds_inclusive():
    crit = SelectionCriteria()
    # exactly on every limit passes
    assert filter_repositories([_repo()], crit) == [_repo()]
    assert filter_repositories([_repo(commit_count=9_999)], crit) == []
    assert filter_repositories([_repo(contributor_count=19)], crit) == []
    assert filter_repositories([_repo(age_days=729)], crit) == []
    assert filter_repositories([_repo(star_count=39)], crit) == []
    assert filter_repositories([_repo(days_since_last_commit=121)], crit) == []
    assert filter_repositories([_repo(is_public=False)], crit) == []


def test_filter_repositories_preserves_order():
    repos = [_repo(name="a"), _repo(name="b", star_count=0), _repo(name="c")]
    kept = filter_repositories(repos, SelectionCriteria())
    assert [r.name for r in kept] == ["a", "c"]


def test_unknown_language_raises():
    with pytest.raises(UnsupportedSyntaxError):
        extract_comments("x = 1", "cobol", DEFAULT_SYNTAXES)


def test_consecutive_full_line_comments_merge():
    src = "# one\n# two\n# three\n"
    units = extract_comments(src, "python", DEFAULT_SYNTAXES, path="a.py")
    assert len(units) == 1
    assert units[0].body == "# one\n# two\n# three"
    assert units[0].locator == "a.py:1-3"


def test_blank_line_breaks_a_run():
    src = "# one\n\n# two\n"
    units = extract_comments(src, "python", DEFAULT_SYNTAXES)
    assert [u.body for u in units] == ["# one", "# two"]


def test_code_line_breaks_a_run():
    src = "# one\nx = 1\n# two\n"
    units = extract_comments(src, "python", DEFAULT_SYNTAXES)
    assert [u.body for u in units] == ["# one", "# two"]


def test_inline_comment_is_its_own_unit():
    src = "# lead\nx = 1  # inline\n"
    units = extract_comments(src, "python", DEFAULT_SYNTAXES, path="a.py")
    assert [u.body for u in units] == ["# lead", "# inline"]
    assert units[1].locator == "a.py:2-2"


def test_inline_never_merges_with_next_full_line():
    src = "x = 1  # inline\n# next\n"
    units = extract_comments(src, "python", DEFAULT_SYNTAXES)
    assert [u.body for u in units] == ["# inline", "# next"]


def test_hash_inside_string_is_not_a_comment():
    src = 's = "# not a comment"\n'
    assert extract_comments(src, "python", DEFAULT_SYNTAXES) == []


def test_single_quote_string_state():
    src = "s = 'still # inside'  # real\n"
    units = extract_comments(src, "python", DEFAULT_SYNTAXES)
    assert [u.body for u in units] == ["# real"]


def test_escaped_quote_stays_in_string():
    src = 's = "a \\" b # nope"\n'
    assert extract_comments(src, "python", DEFAULT_SYNTAXES) == []


def test_block_comment_single_unit_verbatim():
    src = "int x;\n/* first\n * second\n */\nint y;\n"
    units = extract_comments(src, "c_cpp", DEFAULT_SYNTAXES, path="g.c")
    assert len(units) == 1
    assert units[0].body == "/* first\n * second\n */"
    assert units[0].locator == "g.c:2-4"


def test_single_line_block_comment():
    src = "int x; /* mid */ int y;\n"
    units = extract_comments(src, "c_cpp", DEFAULT_SYNTAXES)
    assert [u.body for u in units] == ["/* mid */"]


def test_block_then_line_comment_on_same_line():
    src = "/* a */ // b\n"
    units = extract_comments(src, "c_cpp", DEFAULT_SYNTAXES)
    assert [u.body for u in units] == ["/* a */", "// b"]


def test_unterminated_block_is_kept():
    src = "int x;\n/* dangling\nstill open\n"
    units = extract_comments(src, "c_cpp", DEFAULT_SYNTAXES)
    assert len(units) == 1
    assert units[0].body == "/* dangling\nstill open"


def test_units_sorted_by_start_line():
    src = "// a\nint x; /* b */\n// c\n// d\n"
    units = extract_comments(src, "c_cpp", DEFAULT_SYNTAXES)
    starts = [int(u.locator.rsplit(":", 1)[1].split("-")[0]) for u in units]
    assert starts == sorted(starts)


def test_matlab_block_and_inline():
    src = "%{\nheader text\n%}\ny = 1; % inline\n"
    units = extract_comments(src, "matlab", DEFAULT_SYNTAXES)
    assert units[0].body == "%{\nheader text\n%}"
    assert units[1].body == "% inline"


def test_rouge_two_prefixes():
    src = "# hash style\n-- dash style\n"
    units = extract_comments(src, "rouge", DEFAULT_SYNTAXES)
    # different prefixes still merge: both are full-line comment lines
    assert len(units) == 1
    assert units[0].body == "# hash style\n-- dash style"


def test_commit_messages_from_dicts_and_tuples():
    recs = [
        {"sha": "abc", "author": "ann", "authored_at": "2023-01-01", "message": "Fix it"},
        ("def0", "bob", "2023-01-02", "Break it"),
    ]
    arts, skipped = extract_commit_messages(recs, project="p")
    assert skipped == 0
    assert [a.locator for a in arts] == ["abc", "def0"]
    assert arts[0].kind is ArtifactKind.COMMIT_MESSAGE
    assert arts[1].author == "bob"


def test_blank_commit_messages_skipped_and_tallied():
    recs = [
        {"sha": "a1", "author": "x", "authored_at": "t", "message": ""},
        {"sha": "a2", "author": "x", "authored_at": "t", "message": "  \n "},
        {"sha": "a3", "author": "x", "authored_at": "t", "message": "real"},
    ]
    arts, skipped = extract_commit_messages(recs)
    assert skipped == 2
    assert len(arts) == 1


def test_commit_record_missing_hash_raises():
    with pytest.raises(ValueError, match="hash"):
        extract_commit_messages([{"author": "x", "message": "m"}])


def test_issue_sections_and_locators():
    rec = {
        "number": 7,
        "title": "Solver diverges",
        "author": "maria",
        "created_at": "2023-01-05",
        "body": "Steep gradients blow up.",
        "comments": [
            {"author": "tomas", "body": "Attach the input?"},
            {"author": "maria", "body": "Done."},
        ],
    }
    arts = ingest_issue_or_pr(rec, project="p")
    assert [a.locator for a in arts] == [
        "issue-7/title",
        "issue-7/description",
        "issue-7/comment-1",
        "issue-7/comment-2",
    ]
    assert [a.section_role for a in arts] == [
        SectionRole.TITLE,
        SectionRole.DESCRIPTION,
        SectionRole.COMMENT,
        SectionRole.COMMENT,
    ]
    assert all(a.kind is ArtifactKind.ISSUE_SECTION for a in arts)


def test_pr_record_uses_pr_kind_and_prefix():
    rec = {"number": 3, "title": "Add writer", "is_pull_request": True, "comments": []}
    arts = ingest_issue_or_pr(rec)
    assert arts[0].kind is ArtifactKind.PULL_REQUEST_SECTION
    assert arts[0].locator == "pr-3/title"


def test_empty_sections_dropped_and_empty_record_discarded():
    rec = {"number": 9, "title": "   ", "body": "", "comments": []}
    assert ingest_issue_or_pr(rec) == []


def test_missing_required_field_named_in_error():
    with pytest.raises(ValueError, match="'number'"):
        ingest_issue_or_pr({"title": "t"})
    with pytest.raises(ValueError, match="'title'"):
        ingest_issue_or_pr({"number": 1})


def test_comment_without_author_named_in_error():
    rec = {"number": 2, "title": "t", "comments": [{"body": "hi"}]}
    with pytest.raises(ValueError, match="'author'"):
        ingest_issue_or_pr(rec)


def test_load_archive_json_array_and_jsonl(tmp_path):
    recs = [
        {"number": 1, "title": "one", "comments": []},
        {"number": 2, "title": "two", "comments": []},
    ]
    arr = tmp_path / "a.json"
    arr.write_text(json.dumps(recs))
    jsonl = tmp_path / "b.jsonl"
    jsonl.write_text("\n".join(json.dumps(r) for r in recs) + "\n")
    assert len(load_issue_archive(arr)) == 2
    assert len(load_issue_archive(jsonl)) == 2


def test_filter_bots_case_insensitive_exact():
    arts = [
        RawArtifact("p", ArtifactKind.COMMIT_MESSAGE, "1", "a", author="CI-Bot"),
        RawArtifact("p", ArtifactKind.COMMIT_MESSAGE, "2", "b", author="ci-bot-2"),
        RawArtifact("p", ArtifactKind.COMMIT_MESSAGE, "3", "c", author=None),
        RawArtifact("p", ArtifactKind.COMMIT_MESSAGE, "4", "d", author="maria"),
    ]
    kept = filter_bots(arts, ["ci-bot"])
    assert [a.locator for a in kept] == ["2", "3", "4"]
    # idempotent
    assert filter_bots(kept, ["ci-bot"]) == kept


def test_inspection_sample_deterministic():
    pool = list(range(100))
    a = draw_inspection_sample(pool, 10, seed=7)
    b = draw_inspection_sample(pool, 10, seed=7)
    assert a == b
    assert len(set(a)) == 10
    assert draw_inspection_sample(pool, 10, seed=8) != a


def test_inspection_sample_error_names_both_sizes():
    with pytest.raises(ValueError, match=r"5.*3|3.*5"):
        draw_inspection_sample([1, 2, 3], 5, seed=0)


def test_raw_artifact_roundtrip():
    art = RawArtifact(
        "p",
        ArtifactKind.ISSUE_SECTION,
        "issue-1/title",
        "Body",
        author="x",
        timestamp="2023-01-01",
        section_role=SectionRole.TITLE,
    )
    assert RawArtifact.from_dict(art.as_dict()) == art
    assert art.id == "p/issue_section/issue-1/title"
