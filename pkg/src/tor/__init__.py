"""Tree-of-Reasoning: multi-agent diagnostic reasoning over evidence trees."""

from .agents import Agents, FinalDecision, OpinionRecord, Situation
from .cases import (
    CaseRecord,
    DiagnosisOptions,
    RoleInput,
    build_options,
    default_label_pool,
    generate_cases,
    load_cases,
    save_cases,
    slice_for_role,
)
from .evaluation import CaseScore, EvalReport, aggregate, f1, precision, recall, score_case
from .evidence_tree import (
    ConflictSet,
    DiagnosisEntry,
    EvidenceItem,
    EvidenceTree,
    diff_trees,
    merge_trees,
    parse_tree,
    render_tree,
    validate_tree,
)
from .llm import ChatRequest, ChatResponse, RecordingBackend, RemoteBackend, ScriptedBackend, TranscriptEntry
from .orchestrator import CaseResult, RunConfig, run_batch, run_case
from .retrieval import Document, Retriever, bm25_score, build_query, index_corpus, retrieve_top_k
from .roles import SPECIALISTS, AgentRole
from .transcripts import perfect_transcript

__all__ = [
    "Agents",
    "FinalDecision",
    "OpinionRecord",
    "Situation",
    "CaseRecord",
    "DiagnosisOptions",
    "RoleInput",
    "build_options",
    "default_label_pool",
    "generate_cases",
    "load_cases",
    "save_cases",
    "slice_for_role",
    "CaseScore",
    "EvalReport",
    "aggregate",
    "f1",
    "precision",
    "recall",
    "score_case",
    "ConflictSet",
    "DiagnosisEntry",
    "EvidenceItem",
    "EvidenceTree",
    "diff_trees",
    "merge_trees",
    "parse_tree",
    "render_tree",
    "validate_tree",
    "ChatRequest",
    "ChatResponse",
    "RecordingBackend",
    "RemoteBackend",
    "ScriptedBackend",
    "TranscriptEntry",
    "CaseResult",
    "RunConfig",
    "run_batch",
    "run_case",
    "Document",
    "Retriever",
    "bm25_score",
    "build_query",
    "index_corpus",
    "retrieve_top_k",
    "SPECIALISTS",
    "AgentRole",
    "perfect_transcript",
]

__version__ = "0.1.0"
