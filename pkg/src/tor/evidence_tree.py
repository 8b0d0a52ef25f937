"""Evidence trees: diagnosis -> analysis -> evidence.

A tree is rendered canonically as four indentation levels of four spaces::

    Laboratory Test Clinical Reasoning Pathway
        Iron deficiency anemia
            Analysis: Microcytic picture with low ferritin.
                Evidence 1: Hemoglobin 92 g/L
                Evidence 2: Ferritin 6 ng/mL

The parser is deliberately forgiving about what models actually emit: tabs,
list bullets, markdown emphasis, box-drawing characters, the ``.1``/``.2``
level notation used in the prompt templates, and chatter before the title are
all accepted. Evidence numbering is discarded and recomputed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ParseError, ValidationError

__all__ = [
    "EvidenceItem",
    "DiagnosisEntry",
    "EvidenceTree",
    "ConflictSet",
    "normalize_label",
    "parse_tree",
    "render_tree",
    "validate_tree",
    "merge_trees",
    "diff_trees",
    "tree_to_dict",
    "tree_from_dict",
    "tree_to_json",
    "tree_from_json",
]

INDENT = "    "


@dataclass(frozen=True)
class EvidenceItem:
    index: int
    text: str


@dataclass(frozen=True)
class DiagnosisEntry:
    disease_label: str
    analysis: str
    evidence: tuple[EvidenceItem, ...]

    @property
    def key(self) -> str:
        return normalize_label(self.disease_label)


@dataclass(frozen=True)
class EvidenceTree:
    title: str
    entries: tuple[DiagnosisEntry, ...]

    @property
    def labels(self) -> set[str]:
        """Normalized disease labels."""
        return {e.key for e in self.entries}


@dataclass(frozen=True)
class ConflictSet:
    only_in_left: frozenset[str] = field(default_factory=frozenset)
    only_in_right: frozenset[str] = field(default_factory=frozenset)
    shared: frozenset[str] = field(default_factory=frozenset)

    @property
    def has_conflict(self) -> bool:
        return bool(self.only_in_left or self.only_in_right)


def make_entry(label: str, analysis: str, evidence: Iterable[str]) -> DiagnosisEntry:
    """Build an entry with evidence numbered from 1."""
    items = tuple(EvidenceItem(i, t) for i, t in enumerate(evidence, start=1))
    return DiagnosisEntry(label, analysis, items)


_TRAILING_PUNCT = ".,;:!?。，；：！？"


def normalize_label(text: str) -> str:
    """Case-fold, collapse whitespace and trim trailing punctuation."""
    collapsed = " ".join(text.split()).casefold()
    return collapsed.rstrip(_TRAILING_PUNCT + " ")


# ---------------------------------------------------------------------------
# line classification
# ---------------------------------------------------------------------------

_TEXT, _ANALYSIS, _EVIDENCE, _SKIP = "text", "analysis", "evidence", "skip"

_DIRTREE = re.compile(r"^\.(\d+)\s+(.*)$")
_DECORATION = re.compile(
    r"^(?:[│├└┬┼─┃┣┗━|`]+\s*"  # box drawing / pipes
    r"|#{1,6}\s+"  # markdown headings
    r"|[-*+•·▪◦>]\s+"  # bullets
    r"|\d{1,3}[.)]\s+"  # numbered lists
    r")"
)
_EMPHASIS = re.compile(r"^(\*\*|__)(.+?)\1")
_ANALYSIS_RE = re.compile(
    r"^(?:analysis|reasoning(?:\s+process)?)\s*[:：]\s*(.*)$", re.IGNORECASE | re.DOTALL
)
_EVIDENCE_RE = re.compile(r"^evidence\s*(\d*)\s*[:：]\s*(.*)$", re.IGNORECASE | re.DOTALL)
_EVIDENCE_SPLIT = re.compile(r"[,;，；]?\s*\bevidence\s*\d+\s*[:：]\s*", re.IGNORECASE)
_ELLIPSIS = re.compile(r"^(?:\.{2,}|…+)$")


@dataclass
class _Line:
    lineno: int
    indent: int
    kind: str
    text: str


def _strip_decoration(content: str) -> str:
    while True:
        before = content
        content = _DECORATION.sub("", content, count=1)
        content = _EMPHASIS.sub(r"\2", content, count=1)
        if content.endswith("**") or content.endswith("__"):
            content = content[:-2]
        content = content.strip()
        if content == before:
            return content


def _classify(raw: str, lineno: int = 0) -> list[_Line]:
    expanded = raw.replace("\t", INDENT)
    content = expanded.strip()
    indent = len(expanded) - len(expanded.lstrip())
    if not content:
        return [_Line(lineno, indent, _SKIP, "")]
    m = _DIRTREE.match(content)
    if m:
        indent = int(m.group(1)) * len(INDENT)
        content = m.group(2).strip()
        if content.endswith(".") and not content.endswith(".."):
            content = content[:-1].rstrip()
    content = _strip_decoration(content)
    if not content or _ELLIPSIS.match(content):
        return [_Line(lineno, indent, _SKIP, "")]
    m = _ANALYSIS_RE.match(content)
    if m:
        return [_Line(lineno, indent, _ANALYSIS, m.group(1).strip())]
    m = _EVIDENCE_RE.match(content)
    if m:
        parts = _EVIDENCE_SPLIT.split(m.group(2))
        return [_Line(lineno, indent, _EVIDENCE, p.strip()) for p in parts]
    return [_Line(lineno, indent, _TEXT, content)]


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


class _Draft:
    def __init__(self, label: _Line):
        self.label = label
        self.analysis: str | None = None
        self.analysis_line = label.lineno
        self.evidence: list[str] = []
        self.last_indent = label.indent

    def extend_last(self, text: str) -> None:
        if self.evidence:
            self.evidence[-1] = f"{self.evidence[-1]} {text}".strip()
        elif self.analysis is not None:
            self.analysis = f"{self.analysis} {text}".strip()

    def close(self) -> DiagnosisEntry:
        if not self.analysis:
            raise ParseError("MalformedEntry", self.analysis_line, "empty analysis")
        evidence = [e for e in self.evidence if e]
        if not evidence:
            raise ParseError(
                "MalformedEntry", self.label.lineno,
                f"no evidence for {self.label.text!r}",
            )
        return make_entry(self.label.text, self.analysis, evidence)


def parse_tree(text: str) -> EvidenceTree:
    """Parse model output into an :class:`EvidenceTree`.

    Raises :class:`ParseError` carrying the offending line number.
    """
    if not isinstance(text, str):
        raise TypeError("text must be str")
    lines: list[_Line] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        lines.extend(ln for ln in _classify(raw, lineno) if ln.kind != _SKIP)
    if not lines:
        raise ParseError("NoTitle", 0, "empty input")

    first_analysis = next((i for i, ln in enumerate(lines) if ln.kind == _ANALYSIS), None)
    if first_analysis is None:
        raise ParseError("NoDiagnoses", lines[-1].lineno, "no 'Analysis:' line found")
    label_at = first_analysis - 1
    if label_at < 0 or lines[label_at].kind != _TEXT:
        raise ParseError(
            "MalformedEntry", lines[first_analysis].lineno, "analysis without disease label"
        )
    title_at = label_at - 1
    if title_at < 0 or lines[title_at].kind != _TEXT:
        raise ParseError("NoTitle", lines[label_at].lineno, "no title line before first diagnosis")
    title = lines[title_at].text

    body = lines[label_at:]
    entries: list[DiagnosisEntry] = []
    cur: _Draft | None = None
    for i, ln in enumerate(body):
        nxt = body[i + 1].kind if i + 1 < len(body) else None
        if ln.kind == _TEXT:
            if nxt == _ANALYSIS:
                if cur is not None:
                    entries.append(cur.close())
                cur = _Draft(ln)
                continue
            if cur is not None and cur.analysis is not None and (
                nxt == _EVIDENCE or ln.indent > cur.label.indent
            ):
                cur.extend_last(ln.text)
                continue
            if all(b.kind == _TEXT for b in body[i:]):
                break  # trailing chatter after the tree
            raise ParseError("MalformedEntry", ln.lineno, "disease label without analysis")
        elif ln.kind == _ANALYSIS:
            assert cur is not None
            if cur.analysis is not None:
                raise ParseError("MalformedEntry", ln.lineno, "second analysis for one diagnosis")
            cur.analysis = ln.text
            cur.analysis_line = ln.lineno
            cur.last_indent = ln.indent
        else:
            if cur is None or cur.analysis is None:
                raise ParseError("MalformedEntry", ln.lineno, "evidence before analysis")
            cur.evidence.append(ln.text)
            cur.last_indent = ln.indent
    if cur is not None:
        entries.append(cur.close())
    if not entries:
        raise ParseError("NoDiagnoses", lines[title_at].lineno)
    tree = EvidenceTree(title, tuple(entries))
    problems = validate_tree(tree)
    if problems:
        # e.g. a label that is itself decoration, or duplicate diseases
        raise ParseError("MalformedEntry", lines[title_at].lineno, "; ".join(problems))
    return tree


# ---------------------------------------------------------------------------
# validation / rendering
# ---------------------------------------------------------------------------


def _stable(line: str, kind: str, text: str) -> bool:
    parsed = _classify(line)
    return len(parsed) == 1 and parsed[0].kind == kind and parsed[0].text == text


def validate_tree(tree: EvidenceTree) -> list[str]:
    """Return every invariant violation in ``tree``; empty means valid."""
    problems: list[str] = []

    def check_text(where: str, text: str) -> bool:
        if not isinstance(text, str) or not text.strip():
            problems.append(f"{where}: empty text")
            return False
        if "\n" in text or "\r" in text:
            problems.append(f"{where}: text spans several lines")
            return False
        if text != text.strip():
            problems.append(f"{where}: surrounding whitespace")
            return False
        return True

    if check_text("title", tree.title) and not _stable(tree.title, _TEXT, tree.title):
        problems.append("title: would not survive canonical parsing")
    if not tree.entries:
        problems.append("tree: no diagnosis entries")
    seen: dict[str, int] = {}
    for n, entry in enumerate(tree.entries, start=1):
        where = f"entry {n} ({entry.disease_label!r})"
        if check_text(f"{where} label", entry.disease_label):
            if not _stable(entry.disease_label, _TEXT, entry.disease_label):
                problems.append(f"{where} label: would not survive canonical parsing")
            key = entry.key
            if key in seen:
                problems.append(f"{where}: duplicate disease label (same as entry {seen[key]})")
            else:
                seen[key] = n
        if check_text(f"{where} analysis", entry.analysis):
            if not _stable(f"Analysis: {entry.analysis}", _ANALYSIS, entry.analysis):
                problems.append(f"{where} analysis: would not survive canonical parsing")
        if not entry.evidence:
            problems.append(f"{where}: no evidence items")
        for k, item in enumerate(entry.evidence, start=1):
            if item.index != k:
                problems.append(f"{where}: evidence index {item.index} at position {k}")
            if check_text(f"{where} evidence {k}", item.text):
                if not _stable(f"Evidence {k}: {item.text}", _EVIDENCE, item.text):
                    problems.append(f"{where} evidence {k}: would not survive canonical parsing")
    return problems


def _require_valid(tree: EvidenceTree) -> None:
    problems = validate_tree(tree)
    if problems:
        raise ValidationError(problems)


def render_tree(tree: EvidenceTree) -> str:
    """Canonical text form; raises :class:`ValidationError` for invalid trees."""
    _require_valid(tree)
    out = [tree.title]
    for entry in tree.entries:
        out.append(INDENT + entry.disease_label)
        out.append(INDENT * 2 + f"Analysis: {entry.analysis}")
        for item in entry.evidence:
            out.append(INDENT * 3 + f"Evidence {item.index}: {item.text}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# merge / diff
# ---------------------------------------------------------------------------


def merge_trees(trees: Sequence[EvidenceTree], title: str) -> EvidenceTree:
    """Lossless union of ``trees`` keyed by normalized disease label.

    Analyses of a shared disease are concatenated, each prefixed with the title
    of the tree it came from; a lone analysis is kept as is. Evidence is
    concatenated and deduplicated on normalized text.
    """
    for t in trees:
        _require_valid(t)
    order: list[str] = []
    labels: dict[str, str] = {}
    analyses: dict[str, list[tuple[str, str]]] = {}
    evidence: dict[str, list[str]] = {}
    for t in trees:
        for entry in t.entries:
            key = entry.key
            if key not in labels:
                order.append(key)
                labels[key] = entry.disease_label
                analyses[key] = []
                evidence[key] = []
            segment = (t.title, entry.analysis)
            if segment not in analyses[key]:
                analyses[key].append(segment)
            seen = {normalize_label(e) for e in evidence[key]}
            for item in entry.evidence:
                if normalize_label(item.text) not in seen:
                    evidence[key].append(item.text)
                    seen.add(normalize_label(item.text))
    entries = []
    for key in order:
        segs = analyses[key]
        if len(segs) == 1:
            text = segs[0][1]
        else:
            text = " ".join(f"[{src}] {a}" for src, a in segs)
        entries.append(make_entry(labels[key], text, evidence[key]))
    return EvidenceTree(title, tuple(entries))


def diff_trees(left: EvidenceTree, right: EvidenceTree) -> ConflictSet:
    a, b = left.labels, right.labels
    return ConflictSet(frozenset(a - b), frozenset(b - a), frozenset(a & b))


# ---------------------------------------------------------------------------
# structured serialization
# ---------------------------------------------------------------------------


def tree_to_dict(tree: EvidenceTree) -> dict:
    return {
        "title": tree.title,
        "entries": [
            {
                "disease": e.disease_label,
                "analysis": e.analysis,
                "evidence": [item.text for item in e.evidence],
            }
            for e in tree.entries
        ],
    }


def tree_from_dict(data: dict) -> EvidenceTree:
    try:
        entries = tuple(
            make_entry(e["disease"], e["analysis"], e["evidence"]) for e in data["entries"]
        )
        return EvidenceTree(data["title"], entries)
    except (KeyError, TypeError) as exc:
        raise ValidationError([f"malformed tree document: {exc!r}"]) from exc


def tree_to_json(tree: EvidenceTree, indent: int | None = 2) -> str:
    return json.dumps(tree_to_dict(tree), ensure_ascii=False, indent=indent)


def tree_from_json(text: str) -> EvidenceTree:
    return tree_from_dict(json.loads(text))
