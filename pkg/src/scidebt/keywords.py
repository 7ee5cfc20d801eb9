"""Keyword heuristics for surfacing scientific-debt-like texts.

The shipped phrase lists are a small curated starting point, not a canon;
real deployments override them from a sectioned plain-text file. Matching
is word-boundary exact for whole phrases and prefix-mode for stems, which
are written with a trailing ``*`` in the file.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .datastore import ScientificDebtIndicator
from .normalize import NormalizedInstance

_PHRASE_OK = re.compile(r"[a-z ?!]+")


@dataclass(frozen=True)
class KeywordPhrase:
    text: str
    prefix: bool = False

    def pattern(self) -> re.Pattern:
        if self.prefix:
            return re.compile(r"\b" + re.escape(self.text) + r"[a-z]*")
        return re.compile(r"\b" + re.escape(self.text) + r"\b")


@dataclass
class KeywordConfig:
    groups: dict[ScientificDebtIndicator, list[KeywordPhrase]]

    def validate(self) -> None:
        for indicator, phrases in self.groups.items():
            for phrase in phrases:
                if not phrase.text or _PHRASE_OK.fullmatch(phrase.text) is None:
                    raise ValueError(
                        f"[{indicator.value}] phrase {phrase.text!r} must be "
                        "nonempty lowercase normalized-alphabet text"
                    )


DEFAULT_KEYWORDS = KeywordConfig(
    groups={
        ScientificDebtIndicator.TRANSLATION_CHALLENGE: [
            KeywordPhrase("simplif", prefix=True),
            KeywordPhrase("not correct but"),
        ],
        ScientificDebtIndicator.ASSUMPTION: [
            KeywordPhrase("assume"),
            KeywordPhrase("assumption"),
            KeywordPhrase("approximat", prefix=True),
        ],
        ScientificDebtIndicator.MISSING_EDGE_CASE: [
            KeywordPhrase("does not work for"),
            KeywordPhrase("edge case"),
        ],
        ScientificDebtIndicator.COMPUTATIONAL_ACCURACY: [
            KeywordPhrase("precision"),
            KeywordPhrase("tolerance"),
            KeywordPhrase("accuracy"),
        ],
        ScientificDebtIndicator.NEW_SCIENTIFIC_FINDING: [
            KeywordPhrase("outdated"),
            KeywordPhrase("no longer"),
        ],
    }
)


def load_keyword_config(path: str | Path) -> KeywordConfig:
    """Parse the sectioned phrase file.

    Format: ``[indicator_name]`` headers, one phrase per line, ``#`` lines
    are remarks. A trailing ``*`` marks a stem matched in prefix mode; the
    marker never reaches the stored phrase text.
    """
    groups: dict[ScientificDebtIndicator, list[KeywordPhrase]] = {}
    current: ScientificDebtIndicator | None = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            try:
                current = ScientificDebtIndicator(name)
            except ValueError:
                raise ValueError(f"line {lineno}: unknown indicator group {name!r}") from None
            groups.setdefault(current, [])
            continue
        if current is None:
            raise ValueError(f"line {lineno}: phrase before any [group] header")
        prefix = line.endswith("*")
        text = line[:-1].rstrip() if prefix else line
        groups[current].append(KeywordPhrase(text=text, prefix=prefix))
    config = KeywordConfig(groups=groups)
    config.validate()
    return config


@dataclass(frozen=True)
class CandidateHit:
    instance_id: str
    matched_phrases: tuple[str, ...]
    matched_groups: tuple[ScientificDebtIndicator, ...]


def keyword_scan(
    instances: list[NormalizedInstance], config: KeywordConfig
) -> list[CandidateHit]:
    """Scan instances for configured phrases; one hit per matching instance.

    Output preserves instance order, so chunked parallel scans concatenate
    to the sequential result.
    """
    config.validate()
    compiled: list[tuple[ScientificDebtIndicator, KeywordPhrase, re.Pattern]] = []
    for indicator in ScientificDebtIndicator:
        for phrase in config.groups.get(indicator, []):
            compiled.append((indicator, phrase, phrase.pattern()))
    hits: list[CandidateHit] = []
    for inst in instances:
        phrases: list[str] = []
        indicators: list[ScientificDebtIndicator] = []
        for indicator, phrase, pattern in compiled:
            if pattern.search(inst.text):
                phrases.append(phrase.text)
                if indicator not in indicators:
                    indicators.append(indicator)
        if phrases:
            hits.append(
                CandidateHit(
                    instance_id=inst.instance_id,
                    matched_phrases=tuple(phrases),
                    matched_groups=tuple(indicators),
                )
            )
    return hits
