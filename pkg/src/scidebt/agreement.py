"""Inter-annotator agreement and survey aggregation.

Kappa follows the two-annotator chance-corrected definition with expected
agreement from the product of marginals. Internals run on exact rational
arithmetic and convert to float at the boundary, so recomputation oracles
can demand exact equality of the proportions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class AgreementReport:
    n: int
    agreements: int
    p_o: float
    p_e: float
    kappa: float
    confusion: dict
    degenerate: bool

    @property
    def band(self) -> str:
        """Conventional interpretation label; display only, never computed on."""
        k = self.kappa
        if k < 0:
            return "poor"
        for limit, name in [
            (0.20, "slight"),
            (0.40, "fair"),
            (0.60, "moderate"),
            (0.80, "substantial"),
        ]:
            if k <= limit:
                return name
        return "almost perfect"

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "agreements": self.agreements,
            "p_o": self.p_o,
            "p_e": self.p_e,
            "kappa": self.kappa,
            "degenerate": self.degenerate,
            "band": self.band,
        }


def _value(label) -> str:
    return label.value if hasattr(label, "value") else str(label)


def cohens_kappa(labels_a: list, labels_b: list) -> AgreementReport:
    """Chance-corrected agreement between two equal-length label vectors.

    When both annotators are constant and identical, expected agreement hits
    1 and the statistic is undefined; the report then carries 1.0 for total
    agreement and 0.0 otherwise, with the degenerate flag set.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError(f"label vectors differ in length: {len(labels_a)} vs {len(labels_b)}")
    if not labels_a:
        raise ValueError("label vectors must be nonempty")
    a = [_value(x) for x in labels_a]
    b = [_value(x) for x in labels_b]
    n = len(a)
    labels = sorted(set(a) | set(b))
    confusion = {la: {lb: 0 for lb in labels} for la in labels}
    for x, y in zip(a, b):
        confusion[x][y] += 1
    agreements = sum(confusion[l][l] for l in labels)
    marg_a = {l: sum(confusion[l].values()) for l in labels}
    marg_b = {l: sum(confusion[x][l] for x in labels) for l in labels}
    p_o = Fraction(agreements, n)
    p_e = sum((Fraction(marg_a[l], n) * Fraction(marg_b[l], n) for l in labels), Fraction(0))
    if p_e == 1:
        kappa = Fraction(1) if p_o == 1 else Fraction(0)
        degenerate = True
    else:
        kappa = (p_o - p_e) / (1 - p_e)
        degenerate = False
    return AgreementReport(
        n=n,
        agreements=agreements,
        p_o=float(p_o),
        p_e=float(p_e),
        kappa=float(kappa),
        confusion=confusion,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class CalibrationRow:
    source: str
    n: int
    agreements: int
    kappa: float
    degenerate: bool

    @property
    def agreement_display(self) -> str:
        return f"{self.agreements}/{self.n}"


@dataclass(frozen=True)
class CalibrationReport:
    rows: list[CalibrationRow]
    combined: CalibrationRow

    def as_rows(self) -> list[list]:
        out = [["source", "agreement", "kappa"]]
        for row in self.rows:
            out.append([row.source, row.agreement_display, f"{row.kappa:.3f}"])
        out.append(
            [self.combined.source, self.combined.agreement_display, f"{self.combined.kappa:.3f}"]
        )
        return out


def calibration_report(pairs: dict[str, tuple[list, list]]) -> CalibrationReport:
    """Per-source agreement and kappa plus a combined row.

    The combined row is recomputed over the concatenated vectors, not
    averaged, so its kappa reflects pooled marginals.
    """
    if not pairs:
        raise ValueError("no calibration pairs provided")
    rows = []
    all_a: list = []
    all_b: list = []
    for source in pairs:
        labels_a, labels_b = pairs[source]
        report = cohens_kappa(labels_a, labels_b)
        rows.append(
            CalibrationRow(
                source=source,
                n=report.n,
                agreements=report.agreements,
                kappa=report.kappa,
                degenerate=report.degenerate,
            )
        )
        all_a.extend(labels_a)
        all_b.extend(labels_b)
    combined = cohens_kappa(all_a, all_b)
    return CalibrationReport(
        rows=rows,
        combined=CalibrationRow(
            source="combined",
            n=combined.n,
            agreements=combined.agreements,
            kappa=combined.kappa,
            degenerate=combined.degenerate,
        ),
    )


_JUDGMENTS = ("agree", "unsure", "disagree")


@dataclass(frozen=True)
class SurveyResponse:
    snippet_id: str
    judgment: str
    usefulness: int
    respondent: str

    def __post_init__(self):
        if self.judgment not in _JUDGMENTS:
            raise ValueError(f"judgment must be one of {_JUDGMENTS}, got {self.judgment!r}")
        if not 1 <= self.usefulness <= 5:
            raise ValueError(f"usefulness must be 1..5, got {self.usefulness}")

    def as_dict(self) -> dict:
        return {
            "snippet_id": self.snippet_id,
            "judgment": self.judgment,
            "usefulness": self.usefulness,
            "respondent": self.respondent,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SurveyResponse":
        return cls(
            snippet_id=str(data["snippet_id"]),
            judgment=data["judgment"],
            usefulness=int(data["usefulness"]),
            respondent=str(data["respondent"]),
        )


def survey_aggregate(responses: list[SurveyResponse]) -> dict:
    """Judgment percentages (summing to 100) and the mean usefulness score."""
    if not responses:
        raise ValueError("no survey responses to aggregate")
    n = len(responses)
    counts = {j: 0 for j in _JUDGMENTS}
    for resp in responses:
        counts[resp.judgment] += 1
    return {
        "count": n,
        "agree_pct": 100.0 * counts["agree"] / n,
        "unsure_pct": 100.0 * counts["unsure"] / n,
        "disagree_pct": 100.0 * counts["disagree"] / n,
        "mean_usefulness": sum(r.usefulness for r in responses) / n,
    }
