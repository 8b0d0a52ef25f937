"""Independent reference implementations the library is checked against.

Nothing here imports the code under test except plain data types; each oracle
recomputes its answer the slow, obvious way.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from tor.evidence_tree import EvidenceTree

ROLE_ORDER = ("outpatient", "laboratory", "radiology", "pathology")
DISPLAY = {r: r.capitalize() for r in ROLE_ORDER}


# ---------------------------------------------------------------------------
# labels
# ---------------------------------------------------------------------------


def norm(label: str) -> str:
    """Label key, written independently of the library's normalizer."""
    words = label.casefold().split()
    text = " ".join(words)
    while text and text[-1] in ".,;:!?":
        text = text[:-1].rstrip()
    return text


def label_set(tree: EvidenceTree) -> set[str]:
    return {norm(e.disease_label) for e in tree.entries}


def diff_oracle(left: EvidenceTree, right: EvidenceTree) -> tuple[set, set, set]:
    """Brute force: compare every left label with every right label."""
    only_l, only_r, shared = set(), set(), set()
    for a in left.entries:
        if any(norm(a.disease_label) == norm(b.disease_label) for b in right.entries):
            shared.add(norm(a.disease_label))
        else:
            only_l.add(norm(a.disease_label))
    for b in right.entries:
        if not any(norm(a.disease_label) == norm(b.disease_label) for a in left.entries):
            only_r.add(norm(b.disease_label))
    return only_l, only_r, shared


# ---------------------------------------------------------------------------
# BM25
# ---------------------------------------------------------------------------


def tokens(text: str) -> list[str]:
    return [t for t in re.split(r"[\W_]+", text.lower()) if t]


def bm25_scores(docs: list[tuple[str, str]], query: str, k1: float = 1.2, b: float = 0.75) -> dict[str, float]:
    """Score every document directly from its token list."""
    toks = {doc_id: tokens(body) for doc_id, body in docs}
    n = len(docs)
    avg = sum(len(t) for t in toks.values()) / n
    terms = tokens(query)
    df = {term: sum(1 for words in toks.values() if term in words) for term in set(terms)}
    out = {}
    for doc_id, words in toks.items():
        counts = Counter(words)
        total = 0.0
        for term in terms:
            if df[term] == 0:
                continue
            idf = math.log((n - df[term] + 0.5) / (df[term] + 0.5) + 1.0)
            tf = counts[term]
            total += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(words) / avg))
        out[doc_id] = total
    return out


def top_k_oracle(docs: list[tuple[str, str]], query: str, k: int) -> list[str]:
    scores = bm25_scores(docs, query)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return [doc_id for doc_id, _ in ranked[:k]]


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def confusion_scan(letters: list[str], gold: set[str], selected: set[str]) -> tuple[int, int, int]:
    tp = fp = fn = 0
    for letter in letters:
        if letter in selected and letter in gold:
            tp += 1
        elif letter in selected:
            fp += 1
        elif letter in gold:
            fn += 1
    return tp, fp, fn


def f1_oracle(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 / (1 / p + 1 / r) if p and r else 0.0


# ---------------------------------------------------------------------------
# workflow trace oracle
# ---------------------------------------------------------------------------


def tree_text(title: str, labels: list[str]) -> str:
    """Canonical evidence-tree text with one evidence line per disease."""
    lines = [title]
    for label in labels:
        lines += [f"    {label}",
                  f"        Analysis: findings point towards {label.lower()}",
                  f"            Evidence 1: supporting finding for {label.lower()}"]
    return "\n".join(lines) + "\n"


MALFORMED = "I am not sure about the diagnosis yet."
FINAL_OK = json.dumps({"selected_options": "A",
                       "evi_tree": tree_text("Multi-Agent Reasoning Pathway", ["Anemia"])})


@dataclass
class Scenario:
    """Scripted answers for one run, keyed the way the control flow asks for them.

    ``initial[role]`` and ``updates[(role, round)]`` are lists of raw replies;
    every reply but the last is malformed and triggers a repair. A list made
    only of malformed replies exhausts the repair budget.
    ``answers[(role, round, turn)]`` is the list of participation replies.
    """

    name: str
    roles: tuple[str, ...] = ROLE_ORDER
    k: int = 2
    t: int = 2
    cross_verification: bool = True
    repair_budget: int = 2
    initial: dict[str, list[str]] = field(default_factory=dict)
    labels: dict[str, list[str]] = field(default_factory=dict)
    answers: Callable[[str, int, int], list[str]] = lambda role, r, t: ["No"]
    updates: Callable[[str, int], tuple[list[str], list[str] | None]] = (
        lambda role, r: ([tree_text("Revised Pathway", ["Anemia"])], ["Anemia"])
    )
    final: list[str] = field(default_factory=lambda: [FINAL_OK])


def _yes(answer: str) -> bool | None:
    head = answer.strip().lower().lstrip("*-#>:. ")
    if head.startswith("yes"):
        return True
    if head.startswith("no"):
        return False
    return None


def _named(answer: str, peers: list[str]) -> list[str]:
    words = set(re.findall(r"[a-z]+", answer.lower()))
    return [p for p in peers if p in words]


def predict_calls(s: Scenario) -> list[tuple[str, str]]:
    """(tag, reply) pairs in the exact order the workflow must request them."""
    calls: list[tuple[str, str]] = []
    labels = {r: list(s.labels[r]) for r in s.roles}

    def repaired(base: str, rest: str, replies: list[str]) -> None:
        for i, reply in enumerate(replies[: s.repair_budget + 1]):
            calls.append((base + ("-repair" if i else "") + rest, reply))

    for role in s.roles:
        repaired(f"{role}/initial", "", s.initial[role])

    if s.cross_verification:
        for rnd in range(1, s.k + 1):
            incoming = Counter()
            for turn in range(1, s.t + 1):
                snapshot = {r: set(map(norm, labels[r])) for r in s.roles}
                for role in s.roles:
                    replies = s.answers(role, rnd, turn)
                    flag = None
                    for i, reply in enumerate(replies[:2]):
                        part = "participate-repair" if i else "participate"
                        calls.append((f"{role}/{part}/{rnd}.{turn}", reply))
                        flag = _yes(reply)
                        if flag is not None:
                            break
                    if not flag:
                        continue
                    peers = [p for p in s.roles if p != role]
                    targets = _named(reply, peers)
                    if not targets:
                        targets = [p for p in peers if snapshot[p] != snapshot[role]]
                    for target in targets:
                        calls.append((f"{role}/opinion-{target}/{rnd}.{turn}",
                                      f"{DISPLAY[role]} to {DISPLAY[target]}: please recheck."))
                        incoming[target] += 1
            for role in s.roles:
                if incoming[role]:
                    replies, new_labels = s.updates(role, rnd)
                    repaired(f"{role}/update", f"/{rnd}", replies)
                    if new_labels is not None:
                        labels[role] = list(new_labels)

    repaired("moderator/final", "", s.final)
    return calls


# ---------------------------------------------------------------------------
# the five conformance scenarios
# ---------------------------------------------------------------------------

INITIAL_LABELS = {
    "outpatient": ["Hypertension", "Anemia"],
    "laboratory": ["Anemia"],
    "radiology": ["Hypertension", "Anemia"],
    "pathology": ["Lymphoma"],
}


def _initial(roles=ROLE_ORDER) -> dict[str, list[str]]:
    return {r: [tree_text(f"{DISPLAY[r]} Reasoning Pathway", INITIAL_LABELS[r])] for r in roles}


def all_participate() -> Scenario:
    ring = {r: ROLE_ORDER[(i + 1) % 4] for i, r in enumerate(ROLE_ORDER)}
    return Scenario("all-participate", initial=_initial(), labels=dict(INITIAL_LABELS),
                    answers=lambda role, r, t: [f"Yes: {DISPLAY[ring[role]]}"])


def none_participate() -> Scenario:
    return Scenario("none-participate", initial=_initial(), labels=dict(INITIAL_LABELS))


def mixed() -> Scenario:
    def answers(role, r, t):
        if role == "outpatient":
            return ["Yes: Radiology, Pathology"] if t == 1 else ["No"]
        if role == "laboratory":
            return ["Yes, I have concerns."]  # no target named: conflict fallback
        if role == "pathology":
            return ["Perhaps later", "No"]
        return ["No."]

    def updates(role, r):
        labels = INITIAL_LABELS["outpatient"] if r == 1 else ["Hypertension"]
        return [tree_text("Revised Pathway", labels)], labels

    return Scenario("mixed", initial=_initial(), labels=dict(INITIAL_LABELS),
                    answers=answers, updates=updates)


def repair_needed() -> Scenario:
    initial = _initial()
    initial["laboratory"] = [MALFORMED, initial["laboratory"][0]]
    initial["pathology"] = [MALFORMED, MALFORMED, initial["pathology"][0]]

    def answers(role, r, t):
        if role == "radiology" and t == 1:
            return ["Yes: Laboratory"]
        return ["Well", "Hmm"] if role == "outpatient" and r == 1 else ["No"]

    def updates(role, r):
        if r == 1:
            return [MALFORMED] * 3, None  # budget exhausted, original kept
        return [MALFORMED, tree_text("Revised Pathway", ["Hypertension"])], ["Hypertension"]

    return Scenario("repair-needed", initial=initial, labels=dict(INITIAL_LABELS),
                    answers=answers, updates=updates, final=["not json at all", FINAL_OK])


def cross_verification_off() -> Scenario:
    return Scenario("cross-verification-off", initial=_initial(), labels=dict(INITIAL_LABELS),
                    cross_verification=False,
                    answers=lambda role, r, t: ["Yes: Outpatient"])


SCENARIOS = (all_participate, none_participate, mixed, repair_needed, cross_verification_off)
