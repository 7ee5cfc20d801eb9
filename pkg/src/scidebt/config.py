"""Configuration loading: comment-syntax profiles, bot lists, thresholds.

Configuration is a YAML file merged over built-in defaults. Any key can be
overridden from the environment with the ``SCIDEBT_`` prefix, using ``__``
as the nesting separator (e.g. ``SCIDEBT_LOOP__TAU_HI=0.8``).
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

ENV_PREFIX = "SCIDEBT_"


@dataclass(frozen=True)
class CommentSyntax:
    """Lexical comment profile for one corpus language.

    Extraction is delimiter-based, not grammar-based: ``line_prefixes`` start
    a comment running to end of line, ``blocks`` are (open, close) delimiter
    pairs. ``extensions`` map files to this profile.
    """

    name: str
    line_prefixes: tuple[str, ...]
    blocks: tuple[tuple[str, str], ...] = ()
    extensions: tuple[str, ...] = ()


# Python triple-quoted strings are treated as string literals by the
# string-state tracker, so the python profile carries no block delimiters.
DEFAULT_SYNTAXES: dict[str, CommentSyntax] = {
    s.name: s
    for s in [
        CommentSyntax("python", ("#",), (), (".py", ".pyx")),
        CommentSyntax(
            "c_cpp", ("//",), (("/*", "*/"),), (".c", ".cc", ".cpp", ".cxx", ".h", ".hpp")
        ),
        CommentSyntax("fortran", ("!",), (), (".f", ".f90", ".f95", ".for")),
        CommentSyntax("java", ("//",), (("/*", "*/"),), (".java",)),
        CommentSyntax("shell", ("#",), (), (".sh", ".bash")),
        CommentSyntax("cmake", ("#",), (), (".cmake",)),
        CommentSyntax("matlab", ("%",), (("%{", "%}"),), (".m",)),
        # The rouge corpus language has no published delimiter set; this
        # profile is a configurable default, not canon.
        CommentSyntax("rouge", ("#", "--"), (), (".rg",)),
    ]
}


@dataclass(frozen=True)
class SelectionCriteria:
    """Repository selection thresholds. All thresholds are inclusive."""

    require_public: bool = True
    max_days_since_last_commit: int = 120
    min_commits: int = 10_000
    min_contributors: int = 20
    min_age_days: int = 730
    min_stars: int = 40


DEFAULT_LICENSE_KEYWORDS = ("license", "licence", "copyright", "distributed under")

DEFAULT_CONFIG: dict = {
    "bots": [],
    "license_keywords": list(DEFAULT_LICENSE_KEYWORDS),
    "selection": {
        "require_public": True,
        "max_days_since_last_commit": 120,
        "min_commits": 10_000,
        "min_contributors": 20,
        "min_age_days": 730,
        "min_stars": 40,
    },
    "comment_syntaxes": {},  # merged over DEFAULT_SYNTAXES
    "model": {"alpha": 1.0, "lambda": 0.5},
    "loop": {
        "tau_hi": 0.9,
        "tau_lo": 0.6,
        "margin_max": 0.1,
        "budgets": {"high_confidence": 50, "borderline": 50, "stratified": 100},
    },
    "inspection_sample_size": 100,
    "keywords_file": None,
    "paths": {
        "corpus": "corpus/normalized.jsonl",
        "dataset": "dataset/labeled.jsonl",
        "loop_dir": "loop",
        "models_dir": "models",
        "survey": "survey/responses.jsonl",
        "calibration": "calibration/pairs.json",
        "predictions": "reports/predictions.jsonl",
        "reports_dir": "reports",
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _apply_env_overrides(data: dict, environ: dict[str, str]) -> dict:
    out = copy.deepcopy(data)
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX) :].lower().split("__")
        node = out
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[path[-1]] = yaml.safe_load(raw)
    return out


@dataclass
class Config:
    """Resolved configuration plus the directory it was loaded from."""

    data: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def bots(self) -> list[str]:
        return list(self.data.get("bots", []))

    @property
    def license_keywords(self) -> list[str]:
        return list(self.data.get("license_keywords", DEFAULT_LICENSE_KEYWORDS))

    @property
    def selection(self) -> SelectionCriteria:
        sel = self.data.get("selection", {})
        return SelectionCriteria(
            require_public=bool(sel.get("require_public", True)),
            max_days_since_last_commit=int(sel.get("max_days_since_last_commit", 120)),
            min_commits=int(sel.get("min_commits", 10_000)),
            min_contributors=int(sel.get("min_contributors", 20)),
            min_age_days=int(sel.get("min_age_days", 730)),
            min_stars=int(sel.get("min_stars", 40)),
        )

    @property
    def syntaxes(self) -> dict[str, CommentSyntax]:
        merged = dict(DEFAULT_SYNTAXES)
        for name, spec in self.data.get("comment_syntaxes", {}).items():
            merged[name] = CommentSyntax(
                name=name,
                line_prefixes=tuple(spec.get("line_prefixes", ())),
                blocks=tuple((o, c) for o, c in spec.get("blocks", ())),
                extensions=tuple(spec.get("extensions", ())),
            )
        return merged

    @property
    def alpha(self) -> float:
        return float(self.data["model"]["alpha"])

    @property
    def interpolation(self) -> float:
        return float(self.data["model"]["lambda"])

    def loop_value(self, key: str):
        return self.data["loop"][key]

    def path(self, key: str) -> Path:
        raw = Path(self.data["paths"][key])
        return raw if raw.is_absolute() else self.base_dir / raw


def load_config(path: str | Path | None = None, environ: dict[str, str] | None = None) -> Config:
    """Load config from ``path`` (optional), apply env overrides, return Config."""
    data = copy.deepcopy(DEFAULT_CONFIG)
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"config root must be a mapping, got {type(loaded).__name__}")
        data = _deep_merge(data, loaded)
        base_dir = path.resolve().parent
    data = _apply_env_overrides(data, environ if environ is not None else dict(os.environ))
    return Config(data=data, base_dir=base_dir)


def syntax_for_path(path: str | Path, syntaxes: dict[str, CommentSyntax]) -> CommentSyntax | None:
    """Resolve a file path to its comment-syntax profile by extension."""
    suffix = Path(path).suffix.lower()
    for syntax in syntaxes.values():
        if suffix in syntax.extensions:
            return syntax
    return None
