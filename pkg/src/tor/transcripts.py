"""Canned transcripts for the scripted backend.

``perfect_transcript`` answers every request of a batch the way a flawless,
quiet team would: each specialist lists the gold diagnoses, nobody asks to
speak, and the moderator picks exactly the gold options. Useful for smoke
runs, demos and end-to-end determinism checks.
"""

from __future__ import annotations

import json
from typing import Sequence

from .cases import ROLE_SECTIONS, CaseRecord, LabelPool, build_options
from .evidence_tree import EvidenceTree, make_entry, merge_trees, render_tree, tree_to_dict, validate_tree
from .llm import TranscriptEntry
from .orchestrator import POOLED_TITLE, RunConfig, case_seed
from .roles import AgentRole

ROLE_TITLES = {
    AgentRole.OUTPATIENT: "Chief Complaints Clinical Reasoning Pathway",
    AgentRole.LABORATORY: "Laboratory Test Clinical Reasoning Pathway",
    AgentRole.RADIOLOGY: "Imaging Test Clinical Reasoning Pathway",
    AgentRole.PATHOLOGY: "Pathology Test Clinical Reasoning Pathway",
}


def _evidence(case: CaseRecord, role: AgentRole) -> list[str]:
    texts = []
    for name in ROLE_SECTIONS[role]:
        value = str(getattr(case, name)).strip()
        if value and name not in ("age", "sex"):
            texts.append(" ".join(value.split()))
    return texts or ["No abnormal findings in this modality."]


def canned_tree(case: CaseRecord, role: AgentRole) -> EvidenceTree:
    """A valid tree naming the case's gold diseases, citing the role's own data."""
    evidence = _evidence(case, role)
    entries = [
        make_entry(label, f"The {role.value} findings are consistent with {label}.", evidence)
        for label in case.gold_labels
    ]
    tree = EvidenceTree(ROLE_TITLES[role], tuple(entries))
    if validate_tree(tree):
        entries = [make_entry(label, f"Consistent with {label}.", ["See case data."])
                   for label in case.gold_labels]
        tree = EvidenceTree(ROLE_TITLES[role], tuple(entries))
    return tree


def perfect_transcript(cases: Sequence[CaseRecord], pool: LabelPool,
                       config: RunConfig | None = None) -> list[TranscriptEntry]:
    """Strict-mode transcript for ``run_batch(cases, pool, config, ...)`` with jobs=1."""
    config = config or RunConfig()
    entries: list[TranscriptEntry] = []
    for case in cases:
        trees = {role: canned_tree(case, role) for role in config.roles}
        for role in config.roles:
            text = (render_tree(trees[role]) if config.evidence_tree_enabled
                    else "Likely diagnoses: " + "; ".join(case.gold_labels))
            entries.append(TranscriptEntry(text, tag=f"{role.value}/initial"))
        if config.cross_verification_enabled:
            rounds = 1 if config.early_exit else config.k
            for r in range(1, rounds + 1):
                for turn in range(1, config.t + 1):
                    for role in config.roles:
                        entries.append(TranscriptEntry("No", tag=f"{role.value}/participate/{r}.{turn}"))
        options = build_options(case, pool, config.distractor_count,
                                case_seed(config.seed, case.case_id))
        merged = merge_trees(list(trees.values()), POOLED_TITLE)
        answer = {"selected_options": ",".join(sorted(options.gold_letters)),
                  "evi_tree": tree_to_dict(merged)}
        entries.append(TranscriptEntry(json.dumps(answer, ensure_ascii=False), tag="moderator/final"))
    return entries
