"""Multi-label scoring of final decisions: precision, recall and F1 in percent."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyBatch, SchemaError


@dataclass(frozen=True)
class CaseScore:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return precision(self.tp, self.fp)

    @property
    def recall(self) -> float:
        return recall(self.tp, self.fn)

    @property
    def f1(self) -> float:
        return f1(self.precision, self.recall)

    def metrics(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def precision(tp: int, fp: int) -> float:
    return 100.0 * tp / (tp + fp) if tp + fp else 0.0


def recall(tp: int, fn: int) -> float:
    return 100.0 * tp / (tp + fn) if tp + fn else 0.0


def f1(p: float, r: float) -> float:
    """Harmonic mean of two percentages."""
    return 2.0 * p * r / (p + r) if p + r else 0.0


def score_letters(selected: Iterable[str], gold: Iterable[str]) -> CaseScore:
    sel, g = set(selected), set(gold)
    return CaseScore(len(sel & g), len(sel - g), len(g - sel))


def score_case(decision, options) -> CaseScore:
    """Score a FinalDecision against the DiagnosisOptions it was made over."""
    selected = set(decision.selected_letters)
    unknown = selected - set(options.letters)
    if unknown:
        raise ValueError(f"letters not among the options: {sorted(unknown)}")
    return score_letters(selected, options.gold_letters)


@dataclass(frozen=True)
class Triple:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class EvalReport:
    per_case: tuple[tuple[str, CaseScore], ...]
    micro: Triple
    macro: Triple
    relevance: dict[str, float] | None = None
    completeness: dict[str, float] | None = None
    extras: dict = field(default_factory=dict)

    @staticmethod
    def _mean(values: dict[str, float] | None) -> float | None:
        if not values:
            return None
        return round(sum(values.values()) / len(values), 2)

    def to_dict(self) -> dict:
        return {
            "cases": len(self.per_case),
            "micro": self.micro.to_dict(),
            "macro": self.macro.to_dict(),
            "relevance": self._mean(self.relevance),
            "completeness": self._mean(self.completeness),
            "per_case": [
                {"case_id": cid, **s.metrics(),
                 "relevance": (self.relevance or {}).get(cid),
                 "completeness": (self.completeness or {}).get(cid)}
                for cid, s in self.per_case
            ],
            **self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self, method: str = "Tree-of-Reasoning (ToR)") -> str:
        def fmt(v: float | None) -> str:
            return "" if v is None else f"{v:.2f}"

        head = ("Methods", "P.(%)", "R.(%)", "F1(%)", "Relevance", "Completeness")
        row = (
            method,
            f"{self.micro.precision:.2f}",
            f"{self.micro.recall:.2f}",
            f"{self.micro.f1:.2f}",
            fmt(self._mean(self.relevance)),
            fmt(self._mean(self.completeness)),
        )
        widths = [max(len(a), len(b)) for a, b in zip(head, row)]
        line = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
        return "\n".join([line(head), "-+-".join("-" * w for w in widths), line(row)]) + "\n"


def aggregate(scores: Sequence[tuple[str, CaseScore]]) -> EvalReport:
    """Micro averages over summed counters; the macro average rides along."""
    if not scores:
        raise EmptyBatch("no case scores to aggregate")
    tp = sum(s.tp for _, s in scores)
    fp = sum(s.fp for _, s in scores)
    fn = sum(s.fn for _, s in scores)
    p, r = precision(tp, fp), recall(tp, fn)
    n = len(scores)
    mp = sum(s.precision for _, s in scores) / n
    mr = sum(s.recall for _, s in scores) / n
    mf = sum(s.f1 for _, s in scores) / n
    return EvalReport(tuple(scores), Triple(p, r, f1(p, r)), Triple(mp, mr, mf))


def _human_score(raw: str, row: int, column: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise SchemaError(row, column, f"not a number: {raw!r}") from None
    if not 0.0 <= value <= 5.0:
        raise SchemaError(row, column, "must lie in [0, 5]")
    if round(value, 1) != value:
        raise SchemaError(row, column, "at most one decimal place")
    return value


def import_human_scores(report: EvalReport, path: str | Path) -> EvalReport:
    """Attach rater scores from a ``case_id,relevance,completeness`` CSV."""
    known = {cid for cid, _ in report.per_case}
    relevance: dict[str, float] = {}
    completeness: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"case_id", "relevance", "completeness"} - set(reader.fieldnames or ())
        if missing:
            raise SchemaError(-1, ",".join(sorted(missing)), "missing CSV column")
        for i, row in enumerate(reader):
            cid = row["case_id"]
            if cid not in known:
                raise SchemaError(i, "case_id", f"unknown case {cid!r}")
            relevance[cid] = _human_score(row["relevance"], i, "relevance")
            completeness[cid] = _human_score(row["completeness"], i, "completeness")
    return replace(report, relevance=relevance, completeness=completeness)


def report_from_dict(doc: dict) -> EvalReport:
    """Rebuild a report (counters only) from its JSON form."""
    scores = [(c["case_id"], CaseScore(c["tp"], c["fp"], c["fn"])) for c in doc["per_case"]]
    return aggregate(scores)
