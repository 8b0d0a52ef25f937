"""Okapi BM25 over small local corpora, plus per-role query construction."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .cases import RoleInput
from .errors import EmptyCorpus, SchemaError
from .roles import AgentRole

MAGIC = "TORIDX1"
NO_REFERENCES = "No references retrieved."

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)

Tokenizer = Callable[[str], list[str]]


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    body: str


@dataclass(frozen=True)
class BM25Params:
    k1: float = 1.2
    b: float = 0.75


@dataclass(frozen=True)
class RetrievedDoc:
    doc_id: str
    score: float
    snippet: str


@dataclass
class Index:
    docs: list[Document]
    postings: dict[str, list[tuple[int, int]]]
    doc_lengths: list[int]
    avg_doc_length: float
    params: BM25Params = field(default_factory=BM25Params)

    @property
    def N(self) -> int:
        return len(self.docs)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        n, df = self.N, self.df(term)
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)


def check_corpus(docs: Sequence[Document]) -> list[str]:
    problems = []
    seen: set[str] = set()
    for i, d in enumerate(docs):
        if d.doc_id in seen:
            problems.append(f"doc {i}: duplicate id {d.doc_id!r}")
        seen.add(d.doc_id)
        if not d.body.strip():
            problems.append(f"doc {i} ({d.doc_id!r}): empty body")
    return problems


def index_corpus(
    docs: Sequence[Document],
    params: BM25Params | None = None,
    tokenizer: Tokenizer = tokenize,
) -> Index:
    if not docs:
        raise EmptyCorpus("cannot index an empty corpus")
    problems = check_corpus(docs)
    if problems:
        raise SchemaError(-1, "<corpus>", problems[0])
    postings: dict[str, list[tuple[int, int]]] = {}
    lengths = []
    for ordinal, doc in enumerate(docs):
        tokens = tokenizer(doc.body)
        lengths.append(len(tokens))
        for term, tf in sorted(Counter(tokens).items()):
            postings.setdefault(term, []).append((ordinal, tf))
    avgdl = sum(lengths) / len(lengths)
    return Index(list(docs), dict(sorted(postings.items())), lengths, avgdl, params or BM25Params())


def _term_weight(index: Index, term_tf: int, doc_len: int, idf: float) -> float:
    k1, b = index.params.k1, index.params.b
    avgdl = index.avg_doc_length or 1.0
    denom = term_tf + k1 * (1.0 - b + b * doc_len / avgdl)
    return idf * term_tf * (k1 + 1.0) / denom


def bm25_score(index: Index, query: str, doc_ordinal: int, tokenizer: Tokenizer = tokenize) -> float:
    """BM25 score of one document; repeated query terms count repeatedly."""
    if not 0 <= doc_ordinal < index.N:
        raise IndexError(doc_ordinal)
    total = 0.0
    dl = index.doc_lengths[doc_ordinal]
    for term in tokenizer(query):
        for ordinal, tf in index.postings.get(term, ()):
            if ordinal == doc_ordinal:
                total += _term_weight(index, tf, dl, index.idf(term))
                break
    return total


def _snippet(text: str, max_tokens: int | None) -> str:
    if max_tokens is None:
        return text
    matches = list(_TOKEN.finditer(text))
    if len(matches) <= max_tokens:
        return text
    return text[: matches[max_tokens - 1].end()] if max_tokens > 0 else ""


def retrieve_top_k(
    index: Index,
    query: str,
    k: int = 3,
    snippet_tokens: int | None = 512,
    tokenizer: Tokenizer = tokenize,
) -> list[RetrievedDoc]:
    """Top ``k`` documents by score, ties broken by ascending doc id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = [0.0] * index.N
    for term in tokenizer(query):
        idf = index.idf(term)
        for ordinal, tf in index.postings.get(term, ()):
            scores[ordinal] += _term_weight(index, tf, index.doc_lengths[ordinal], idf)
    order = sorted(range(index.N), key=lambda i: (-scores[i], index.docs[i].doc_id))
    return [
        RetrievedDoc(index.docs[i].doc_id, scores[i], _snippet(index.docs[i].body, snippet_tokens))
        for i in order[:k]
    ]


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------

_QUERY_ORDER: dict[AgentRole, tuple[str, ...]] = {
    AgentRole.OUTPATIENT: ("chief_complaints", "present_illness"),
}


def build_query(role: AgentRole, role_input: RoleInput, budget: int = 256,
                tokenizer: Tokenizer = tokenize) -> str:
    """Space-joined tokens of the role's sections, at most ``budget`` tokens.

    The outpatient doctor's complaint and history come first.
    """
    first = _QUERY_ORDER.get(role, ())
    names = [n for n in first if n in role_input.names]
    names += [n for n in role_input.names if n not in names]
    tokens: list[str] = []
    for name in names:
        tokens.extend(tokenizer(role_input.get(name)))
        if len(tokens) >= budget:
            break
    return " ".join(tokens[:budget])


def format_retrieved(docs: Sequence[RetrievedDoc], titles: Mapping[str, str] | None = None) -> str:
    """Text for the ``{retrieved_info}`` prompt slot."""
    if not docs:
        return NO_REFERENCES
    titles = titles or {}
    blocks = []
    for n, d in enumerate(docs, start=1):
        head = f"[{n}] {titles.get(d.doc_id, d.doc_id)}"
        blocks.append(f"{head}\n{d.snippet}")
    return "\n\n".join(blocks)


class Retriever:
    """Per-role indexes over local corpora, with a shared fallback index."""

    def __init__(self, shared: Index | None = None,
                 per_role: Mapping[AgentRole, Index] | None = None,
                 k: int = 3, snippet_tokens: int | None = 512, query_budget: int = 256):
        self.shared = shared
        self.per_role = dict(per_role or {})
        self.k = k
        self.snippet_tokens = snippet_tokens
        self.query_budget = query_budget

    def index_for(self, role: AgentRole) -> Index | None:
        return self.per_role.get(role, self.shared)

    def retrieve(self, role: AgentRole, role_input: RoleInput) -> tuple[str, list[RetrievedDoc]]:
        """Return (query, documents); an empty query or missing index retrieves nothing."""
        index = self.index_for(role)
        query = build_query(role, role_input, self.query_budget)
        if index is None or not query:
            return query, []
        return query, retrieve_top_k(index, query, self.k, self.snippet_tokens)

    def titles(self, role: AgentRole) -> dict[str, str]:
        index = self.index_for(role)
        return {d.doc_id: d.title for d in index.docs} if index else {}


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def load_corpus(path: str | Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            raw = json.loads(line)
            try:
                docs.append(Document(str(raw["id"]), str(raw.get("title", "")), str(raw["body"])))
            except KeyError as exc:
                raise SchemaError(lineno - 1, str(exc.args[0]), "missing") from None
    return docs


def save_corpus(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"id": d.doc_id, "title": d.title, "body": d.body},
                                ensure_ascii=False) + "\n")


def save_index(index: Index, path: str | Path) -> None:
    """Write ``TORIDX1`` on the first line followed by a JSON document."""
    doc = {
        "params": {"k1": index.params.k1, "b": index.params.b},
        "docs": [{"id": d.doc_id, "title": d.title, "body": d.body} for d in index.docs],
        "doc_lengths": index.doc_lengths,
        "avg_doc_length": index.avg_doc_length,
        "postings": {t: [list(p) for p in plist] for t, plist in index.postings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MAGIC + "\n")
        json.dump(doc, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_index(path: str | Path) -> Index:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != MAGIC:
            raise SchemaError(-1, "<index>", f"bad magic header {header!r}")
        doc = json.load(fh)
    return Index(
        docs=[Document(d["id"], d["title"], d["body"]) for d in doc["docs"]],
        postings={t: [tuple(p) for p in plist] for t, plist in doc["postings"].items()},
        doc_lengths=list(doc["doc_lengths"]),
        avg_doc_length=float(doc["avg_doc_length"]),
        params=BM25Params(**doc["params"]),
    )
