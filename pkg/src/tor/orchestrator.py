"""Drives one case through initial diagnosis, cross-verification rounds and
the moderator's final decision, recording every step in a trace."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .agents import Agents, FinalDecision, OpinionRecord, Situation, View, make_tag, patient_case_json
from .cases import CaseRecord, DiagnosisOptions, LabelPool, build_options, slice_for_role
from .errors import AgentError, BackendError, EmptyBatch, FinalDecisionError, InvalidConfig, RunError, TorError
from .evaluation import EvalReport, aggregate, score_case
from .evidence_tree import EvidenceTree, merge_trees, tree_to_dict
from .prompts import TemplateSet
from .retrieval import NO_REFERENCES, Retriever, format_retrieved
from .roles import SPECIALISTS, AgentRole
from .trace import Trace

log = logging.getLogger(__name__)

POOLED_TITLE = "Multi-Agent Reasoning Pathway"


@dataclass(frozen=True)
class RunConfig:
    k: int = 2
    t: int = 2
    active_roles: frozenset[AgentRole] = frozenset(SPECIALISTS)
    distractor_count: int | None = None
    seed: int = 0
    retrieval_k: int = 3
    evidence_tree_enabled: bool = True
    cross_verification_enabled: bool = True
    rag_enabled: bool = True
    repair_budget: int = 2
    early_exit: bool = False
    temperature: float = 0.0
    max_tokens: int = 2048
    backend: str = "scripted"

    def __post_init__(self):
        object.__setattr__(self, "active_roles", frozenset(self.active_roles))

    def validate(self) -> None:
        if self.k < 1 or self.t < 1:
            raise InvalidConfig("k and t must both be >= 1")
        if AgentRole.OUTPATIENT not in self.active_roles:
            raise InvalidConfig("the outpatient doctor must be active")
        if AgentRole.MODERATOR in self.active_roles:
            raise InvalidConfig("the moderator is not a specialist role")
        if self.repair_budget < 0:
            raise InvalidConfig("repair_budget must be >= 0")
        if self.retrieval_k < 1:
            raise InvalidConfig("retrieval_k must be >= 1")

    @property
    def roles(self) -> tuple[AgentRole, ...]:
        return tuple(r for r in SPECIALISTS if r in self.active_roles)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["active_roles"] = [r.value for r in self.roles]
        return d


@dataclass
class RunState:
    views: dict[AgentRole, View] = field(default_factory=dict)
    interactions: list[OpinionRecord] = field(default_factory=list)
    round_num: int = 0
    turn_num: int = 0


@dataclass
class CaseResult:
    case_id: str
    final: FinalDecision
    options: DiagnosisOptions
    trace: Trace
    initial_views: dict[AgentRole, View]
    final_views: dict[AgentRole, View]
    interactions: list[OpinionRecord]
    pooled_tree: EvidenceTree | None
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def score(self):
        return score_case(self.final, self.options)

    def to_dict(self) -> dict:
        """The result document; excludes wall-clock timing so it replays byte-identically."""
        return {
            "case_id": self.case_id,
            "selected_options": list(self.final.selected_letters),
            "evi_tree": tree_to_dict(self.final.merged_tree),
            "metrics": self.score.metrics(),
            "options": self.options.to_dict(),
            "pooled_tree": tree_to_dict(self.pooled_tree) if self.pooled_tree else None,
            "interactions": [op.to_dict() for op in self.interactions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _snapshot(view: View) -> dict:
    if isinstance(view, EvidenceTree):
        return {"tree": tree_to_dict(view)}
    return {"text": view}


def run_case(
    case: CaseRecord,
    pool: LabelPool,
    config: RunConfig,
    backend,
    retriever: Retriever | None = None,
    templates: TemplateSet | None = None,
) -> CaseResult:
    """Run the full workflow for one case.

    Raises :class:`RunError` wrapping the first unrecoverable failure; the
    partial trace is attached to it.
    """
    config.validate()
    trace = Trace()
    trace.add("start", case.case_id, config=config.to_dict())
    agents = Agents(backend, templates, trace, config.repair_budget,
                    config.evidence_tree_enabled, config.temperature, config.max_tokens)
    state = RunState()
    timing: dict[str, float] = {}
    t0 = time.perf_counter()
    try:
        for role in config.roles:
            role_input = slice_for_role(case, role, config.active_roles)
            retrieved = NO_REFERENCES
            if config.rag_enabled and retriever is not None:
                query, docs = retriever.retrieve(role, role_input)
                trace.add("retrieval", make_tag(role, "retrieval"), query=query,
                          docs=[[d.doc_id, d.score] for d in docs])
                retrieved = format_retrieved(docs, retriever.titles(role))
            state.views[role] = agents.initial_diagnosis(role, role_input, retrieved)
            trace.add("snapshot", make_tag(role, "initial"), round=0, source="initial",
                      **_snapshot(state.views[role]))
        initial = dict(state.views)
        timing["initial_s"] = time.perf_counter() - t0

        if config.cross_verification_enabled:
            _discuss(case, config, agents, state, trace)
        timing["discussion_s"] = time.perf_counter() - t0 - timing["initial_s"]

        options = build_options(case, pool, config.distractor_count, config.seed)
        trace.add("options", "", options=options.to_dict())
        final = agents.final_decision(case, state.views, options)
        trace.add("decision", make_tag(AgentRole.MODERATOR, "final"),
                  selected=list(final.selected_letters))
    except (AgentError, FinalDecisionError, BackendError, TorError) as exc:
        trace.add("failure", case.case_id, error=f"{type(exc).__name__}: {exc}")
        raise RunError(case.case_id, exc, trace) from exc
    timing["total_s"] = time.perf_counter() - t0

    trees = [v for v in state.views.values() if isinstance(v, EvidenceTree)]
    pooled = merge_trees(trees, POOLED_TITLE) if trees and len(trees) == len(state.views) else None
    return CaseResult(case.case_id, final, options, trace, initial, dict(state.views),
                      list(state.interactions), pooled, timing)


def _discuss(case: CaseRecord, config: RunConfig, agents: Agents, state: RunState, trace: Trace) -> None:
    patient = patient_case_json(case)
    while state.round_num < config.k:
        state.round_num += 1
        round_log: list[OpinionRecord] = []
        for turn in range(1, config.t + 1):
            state.turn_num = turn
            for role in config.roles:
                situation = Situation(patient, state.round_num, turn, dict(state.views))
                joined, answer = agents.should_participate(role, situation)
                if not joined:
                    continue
                for target in agents.choose_targets(role, situation, answer):
                    opinion = agents.generate_opinion(role, target, situation)
                    round_log.append(opinion)
                    state.interactions.append(opinion)
                    trace.add("opinion", make_tag(role, f"opinion-{target.value}",
                                                  state.round_num, turn), **opinion.to_dict())
        for role in config.roles:
            before = state.views[role]
            after = agents.update_tree(role, before, round_log, state.round_num)
            state.views[role] = after
            trace.add("snapshot", make_tag(role, "update", state.round_num), round=state.round_num,
                      source="update" if after is not before else "unchanged", **_snapshot(after))
        if config.early_exit and not round_log:
            break


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------


def case_seed(seed: int, case_id: str) -> int:
    return seed ^ int(hashlib.sha256(case_id.encode("utf-8")).hexdigest()[:8], 16)


@dataclass
class CaseFailure:
    case_id: str
    error: str
    trace: Trace | None = None

    def to_dict(self) -> dict:
        return {"case_id": self.case_id, "error": self.error}


@dataclass
class BatchResult:
    results: list[CaseResult]
    failures: list[CaseFailure]
    report: EvalReport | None

    @property
    def ok(self) -> bool:
        return not self.failures


def run_batch(
    cases: Sequence[CaseRecord],
    pool: LabelPool,
    config: RunConfig,
    backend,
    retriever: Retriever | None = None,
    templates: TemplateSet | None = None,
    jobs: int = 1,
) -> BatchResult:
    """Run every case; a failing case is recorded and does not stop the batch."""
    config.validate()

    def one(case: CaseRecord):
        cfg = replace(config, seed=case_seed(config.seed, case.case_id))
        try:
            return run_case(case, pool, cfg, backend, retriever, templates)
        except RunError as exc:
            log.warning("case %s failed: %s", case.case_id, exc.cause)
            return CaseFailure(case.case_id, f"{type(exc.cause).__name__}: {exc.cause}", exc.trace)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            outcomes = list(pool_exec.map(one, cases))
    else:
        outcomes = [one(c) for c in cases]
    results = [o for o in outcomes if isinstance(o, CaseResult)]
    failures = [o for o in outcomes if isinstance(o, CaseFailure)]
    try:
        report = aggregate([(r.case_id, r.score) for r in results])
    except EmptyBatch:
        report = None
    return BatchResult(results, failures, report)


def write_outputs(batch: BatchResult, out_dir: str | Path, force: bool = False) -> Path:
    """Write results/, traces/, report.json, report.txt and failures.json."""
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise FileExistsError(f"{out} is not empty (use --force to overwrite)")
    (out / "results").mkdir(parents=True, exist_ok=True)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    for r in batch.results:
        (out / "results" / f"{r.case_id}.json").write_text(r.to_json(), encoding="utf-8")
        (out / "traces" / f"{r.case_id}.jsonl").write_text(r.trace.to_jsonl(), encoding="utf-8")
    for f in batch.failures:
        if f.trace is not None:
            (out / "traces" / f"{f.case_id}.jsonl").write_text(f.trace.to_jsonl(), encoding="utf-8")
    report_doc = batch.report.to_dict() if batch.report else {"cases": 0}
    report_doc["failures"] = [f.to_dict() for f in batch.failures]
    (out / "report.json").write_text(json.dumps(report_doc, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    (out / "report.txt").write_text(batch.report.to_table() if batch.report else "no successful cases\n",
                                    encoding="utf-8")
    (out / "failures.json").write_text(
        json.dumps([f.to_dict() for f in batch.failures], indent=2) + "\n", encoding="utf-8"
    )
    return out
