"""``tor`` command line.

Configuration is resolved as defaults < config file < flags < environment.
The config file is TOML (``--config`` or ``TOR_CONFIG``); the environment
supplies ``TOR_API_KEY`` and ``TOR_BASE_URL``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .cases import (
    check_cases,
    check_pool,
    default_distractor_count,
    default_label_pool,
    eligible_distractors,
    generate_cases,
    load_cases,
    load_pool,
    save_cases,
    save_pool,
)
from .errors import TorError
from .evaluation import import_human_scores, report_from_dict
from .evidence_tree import diff_trees, merge_trees, parse_tree, render_tree, tree_from_json, tree_to_json
from .llm import RecordingBackend, RemoteBackend, ScriptedBackend, load_transcript, record_session, save_transcript
from .orchestrator import RunConfig, run_batch, write_outputs
from .prompts import TemplateSet
from .retrieval import MAGIC, BM25Params, Retriever, check_corpus, index_corpus, load_corpus, load_index, save_index
from .roles import SPECIALISTS, AgentRole
from .transcripts import perfect_transcript

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("tor")

ABLATIONS = ("no-crossverify", "no-evidence-tree", "no-rag",
             "no-laboratory", "no-radiology", "no-pathology")

# every configurable run setting with its default
DEFAULTS: dict[str, object] = {
    "cases": None,
    "pool": None,
    "corpus": None,
    "role_corpus": [],
    "transcript": None,
    "record": None,
    "templates": None,
    "out": "out",
    "backend": "scripted",
    "lenient": False,
    "model": "deepseek-chat",
    "base_url": "https://api.deepseek.com/v1",
    "api_key": "",
    "timeout": 60.0,
    "retries": 3,
    "seed": 0,
    "k": 2,
    "t": 2,
    "retrieval_k": 3,
    "distractors": None,
    "repairs": 2,
    "ablate": [],
    "early_exit": False,
    "jobs": 1,
    "force": False,
}

ENV = {"TOR_API_KEY": "api_key", "TOR_BASE_URL": "base_url"}


def _d(key: str) -> str:
    return f"(default: {DEFAULTS[key]!r})"


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # defaults are None here so explicitly given flags can be told apart
    p.add_argument("--config", help="TOML config file (default: $TOR_CONFIG)")
    p.add_argument("--cases", help=f"case file, JSON array {_d('cases')}")
    p.add_argument("--pool", help=f"label pool JSON; built-in catalog when omitted {_d('pool')}")
    p.add_argument("--corpus", help=f"shared retrieval corpus (.jsonl) or index file {_d('corpus')}")
    p.add_argument("--role-corpus", action="append", metavar="ROLE=PATH",
                   help=f"per-role corpus or index, repeatable {_d('role_corpus')}")
    p.add_argument("--transcript", help=f"JSONL transcript for the scripted backend {_d('transcript')}")
    p.add_argument("--record", help=f"write a transcript of every exchange here {_d('record')}")
    p.add_argument("--templates", help=f"template override directory {_d('templates')}")
    p.add_argument("-o", "--out", help=f"output directory {_d('out')}")
    p.add_argument("--backend", choices=("scripted", "remote"), help=f"model backend {_d('backend')}")
    p.add_argument("--lenient", action="store_true", default=None,
                   help=f"lenient transcript matching {_d('lenient')}")
    p.add_argument("--model", help=f"remote model name {_d('model')}")
    p.add_argument("--base-url", help=f"remote API base URL; TOR_BASE_URL wins {_d('base_url')}")
    p.add_argument("--timeout", type=float, help=f"remote timeout in seconds {_d('timeout')}")
    p.add_argument("--retries", type=int, help=f"remote retry budget {_d('retries')}")
    p.add_argument("--seed", type=int, help=f"base seed {_d('seed')}")
    p.add_argument("--k", type=int, help=f"discussion rounds {_d('k')}")
    p.add_argument("--t", type=int, help=f"turns per round {_d('t')}")
    p.add_argument("--retrieval-k", type=int, help=f"documents retrieved per agent {_d('retrieval_k')}")
    p.add_argument("--distractors", type=int,
                   help=f"distractor options per case; max(3, gold) when unset {_d('distractors')}")
    p.add_argument("--repairs", type=int, help=f"format repair re-prompts {_d('repairs')}")
    p.add_argument("--ablate", action="append", choices=ABLATIONS,
                   help=f"switch a component off, repeatable {_d('ablate')}")
    p.add_argument("--early-exit", action="store_true", default=None,
                   help=f"stop discussing after a silent round {_d('early_exit')}")
    p.add_argument("--jobs", type=int, help=f"cases run in parallel {_d('jobs')}")
    p.add_argument("--force", action="store_true", default=None,
                   help=f"allow writing into a non-empty output directory {_d('force')}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tor", description="Tree-of-Reasoning diagnostic workflow")
    parser.add_argument("--version", action="version", version=f"tor {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr (default: False)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run cases through the workflow")
    _add_run_flags(run)
    rec = sub.add_parser("record", help="run against the remote backend and save a transcript")
    _add_run_flags(rec)

    gen = sub.add_parser("gen-cases", help="write synthetic cases and the matching label pool")
    gen.add_argument("--count", type=int, default=10, help="number of cases (default: 10)")
    gen.add_argument("--seed", type=int, default=0, help="generator seed (default: 0)")
    gen.add_argument("-o", "--out", required=True, help="case file to write")
    gen.add_argument("--pool-out", help="label pool file to write (default: None)")
    gen.add_argument("--transcript-out",
                     help="also write a perfect-answer transcript for these cases (default: None)")
    gen.add_argument("--run-seed", type=int, default=0,
                     help="run seed the transcript's option letters are built for (default: 0)")
    gen.add_argument("--force", action="store_true", help="overwrite existing files (default: False)")

    idx = sub.add_parser("index", help="build a BM25 index from a JSONL corpus")
    idx.add_argument("--corpus", required=True, help="JSONL corpus, one {id,title,body} per line")
    idx.add_argument("-o", "--out", required=True, help="index file to write")
    idx.add_argument("--k1", type=float, default=1.2, help="term saturation (default: 1.2)")
    idx.add_argument("--b", type=float, default=0.75, help="length normalization (default: 0.75)")
    idx.add_argument("--seed", type=int, default=0, help="unused; accepted for uniformity (default: 0)")
    idx.add_argument("--force", action="store_true", help="overwrite an existing file (default: False)")

    tree = sub.add_parser("tree", help="evidence tree utilities")
    tsub = tree.add_subparsers(dest="tree_command", required=True)
    tp = tsub.add_parser("parse", help="model text -> structured JSON")
    tp.add_argument("file", help="text file ('-' for stdin)")
    tr = tsub.add_parser("render", help="structured JSON -> canonical text")
    tr.add_argument("file", help="JSON file ('-' for stdin)")
    td = tsub.add_parser("diff", help="disease-label conflicts between two trees")
    td.add_argument("left")
    td.add_argument("right")
    tm = tsub.add_parser("merge", help="lossless union of trees")
    tm.add_argument("files", nargs="+")
    tm.add_argument("--title", default="Multi-Agent Reasoning Pathway",
                    help="merged tree title (default: 'Multi-Agent Reasoning Pathway')")
    for p in (tp, tr, td, tm):
        p.add_argument("--seed", type=int, default=0, help="unused; accepted for uniformity (default: 0)")

    ev = sub.add_parser("eval", help="print or amend an evaluation report")
    ev.add_argument("report", help="report.json or the run output directory")
    ev.add_argument("--import-human", metavar="CSV",
                    help="case_id,relevance,completeness scores (default: None)")
    ev.add_argument("-o", "--out", help="write the amended report here (default: None)")
    ev.add_argument("--seed", type=int, default=0, help="unused; accepted for uniformity (default: 0)")

    val = sub.add_parser("validate", help="schema-check inputs and list every violation")
    val.add_argument("--cases", help="case file (default: None)")
    val.add_argument("--pool", help="label pool file (default: None)")
    val.add_argument("--corpus", action="append", help="corpus JSONL or index, repeatable (default: None)")
    val.add_argument("--transcript", help="transcript to dry-run against --cases (default: None)")
    val.add_argument("--templates", help="template override directory (default: None)")
    val.add_argument("--config", help="TOML config file for the dry run (default: None)")
    val.add_argument("--seed", type=int, default=None, help="seed for the dry run (default: 0)")
    return parser


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def resolve_config(args: argparse.Namespace, environ: dict | None = None) -> dict:
    environ = os.environ if environ is None else environ
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None) or environ.get("TOR_CONFIG")
    if path:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise TorError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(data)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for var, key in ENV.items():
        if environ.get(var):
            cfg[key] = environ[var]
    cfg["ablate"] = list(cfg["ablate"] or [])
    cfg["role_corpus"] = list(cfg["role_corpus"] or [])
    return cfg


def run_config(cfg: dict) -> RunConfig:
    ablate = set(cfg["ablate"])
    roles = set(SPECIALISTS)
    for name in ("laboratory", "radiology", "pathology"):
        if f"no-{name}" in ablate:
            roles.discard(AgentRole.parse(name))
    return RunConfig(
        k=int(cfg["k"]),
        t=int(cfg["t"]),
        active_roles=frozenset(roles),
        distractor_count=cfg["distractors"],
        seed=int(cfg["seed"]),
        retrieval_k=int(cfg["retrieval_k"]),
        evidence_tree_enabled="no-evidence-tree" not in ablate,
        cross_verification_enabled="no-crossverify" not in ablate,
        rag_enabled="no-rag" not in ablate,
        repair_budget=int(cfg["repairs"]),
        early_exit=bool(cfg["early_exit"]),
        backend=str(cfg["backend"]),
    )


def _load_index_or_corpus(path: str, k1: float = 1.2, b: float = 0.75):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    if first == MAGIC:
        return load_index(path)
    return index_corpus(load_corpus(path), BM25Params(k1, b))


def build_retriever(cfg: dict) -> Retriever | None:
    shared = _load_index_or_corpus(cfg["corpus"]) if cfg["corpus"] else None
    per_role = {}
    for spec in cfg["role_corpus"]:
        name, _, path = spec.partition("=")
        if not path:
            raise TorError(f"--role-corpus expects ROLE=PATH, got {spec!r}")
        per_role[AgentRole.parse(name)] = _load_index_or_corpus(path)
    if shared is None and not per_role:
        return None
    return Retriever(shared, per_role, k=int(cfg["retrieval_k"]))


def build_backend(cfg: dict):
    if cfg["backend"] == "scripted":
        if not cfg["transcript"]:
            raise TorError("the scripted backend needs --transcript")
        backend = ScriptedBackend.from_file(cfg["transcript"], strict=not cfg["lenient"])
    else:
        backend = RemoteBackend(cfg["base_url"], cfg["model"], cfg["api_key"] or None,
                                timeout=float(cfg["timeout"]), retries=int(cfg["retries"]),
                                seed=int(cfg["seed"]))
    if cfg["record"]:
        backend = RecordingBackend(backend)
    return backend


def _printable(cfg: dict) -> dict:
    shown = dict(cfg)
    if shown.get("api_key"):
        shown["api_key"] = "***"
    return shown


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _guard(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (use --force to overwrite)")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if args.command == "record":
        cfg["backend"] = "remote"
        if not cfg["record"]:
            raise TorError("record needs --record PATH")
    if not cfg["cases"]:
        raise TorError("--cases is required")
    config = run_config(cfg)
    config.validate()
    cases = load_cases(cfg["cases"])
    pool = load_pool(cfg["pool"]) if cfg["pool"] else default_label_pool()
    retriever = build_retriever(cfg) if config.rag_enabled else None
    templates = TemplateSet(cfg["templates"])
    backend = build_backend(cfg)
    out = Path(cfg["out"])
    if out.exists() and any(out.iterdir()) and not cfg["force"]:
        raise FileExistsError(f"{out} is not empty (use --force to overwrite)")

    batch = run_batch(cases, pool, config, backend, retriever, templates, jobs=int(cfg["jobs"]))
    write_outputs(batch, out, force=True)
    (out / "config.json").write_text(json.dumps(_printable(cfg), indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    if isinstance(backend, RecordingBackend):
        n = record_session(backend, cfg["record"])
        log.info("recorded %d exchanges to %s", n, cfg["record"])
    if batch.report is not None:
        sys.stdout.write(batch.report.to_table())
    for f in batch.failures:
        print(f"FAILED {f.case_id}: {f.error}", file=sys.stderr)
    return 0 if batch.ok else 1


def cmd_gen_cases(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _guard(out, args.force)
    cases = generate_cases(args.count, args.seed)
    save_cases(cases, out)
    if args.pool_out:
        _guard(Path(args.pool_out), args.force)
        save_pool(default_label_pool(), args.pool_out)
    if args.transcript_out:
        _guard(Path(args.transcript_out), args.force)
        entries = perfect_transcript(cases, default_label_pool(), RunConfig(seed=args.run_seed))
        save_transcript(entries, args.transcript_out)
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    out = Path(args.out)
    _guard(out, args.force)
    index = index_corpus(load_corpus(args.corpus), BM25Params(args.k1, args.b))
    save_index(index, out)
    print(f"indexed {index.N} documents, {len(index.postings)} terms")
    return 0


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")


def cmd_tree(args: argparse.Namespace) -> int:
    if args.tree_command == "parse":
        print(tree_to_json(parse_tree(_read(args.file))))
    elif args.tree_command == "render":
        sys.stdout.write(render_tree(tree_from_json(_read(args.file))))
    elif args.tree_command == "diff":
        c = diff_trees(parse_tree(_read(args.left)), parse_tree(_read(args.right)))
        print(json.dumps({"only_in_left": sorted(c.only_in_left),
                          "only_in_right": sorted(c.only_in_right),
                          "shared": sorted(c.shared)}, indent=2, ensure_ascii=False))
    else:
        trees = [parse_tree(_read(f)) for f in args.files]
        sys.stdout.write(render_tree(merge_trees(trees, args.title)))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    path = Path(args.report)
    if path.is_dir():
        path = path / "report.json"
    report = report_from_dict(json.loads(path.read_text(encoding="utf-8")))
    if args.import_human:
        report = import_human_scores(report, args.import_human)
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    sys.stdout.write(report.to_table())
    return 0


def validate_inputs(args: argparse.Namespace) -> list[str]:
    """Every problem found in the given inputs, as printable lines."""
    problems: list[str] = []
    cases = None
    if args.cases:
        try:
            data = json.loads(Path(args.cases).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            problems.append(f"cases: {exc}")
        else:
            errs = check_cases(data)
            problems += [f"cases: {e}" for e in errs]
            if not errs:
                cases = load_cases(args.cases)
    pool = None
    if args.pool:
        try:
            data = json.loads(Path(args.pool).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            problems.append(f"pool: {exc}")
        else:
            errs = check_pool(data)
            problems += [f"pool: {e}" for e in errs]
            if not errs:
                pool = load_pool(args.pool)
    if cases is not None:
        effective = pool if pool is not None else default_label_pool()
        for c in cases:
            need = default_distractor_count(c)
            have = len(eligible_distractors(c, effective))
            if have < need:
                problems.append(f"pool: case {c.case_id}: department {c.department!r} offers "
                                f"{have} distractors, {need} needed")
    for corpus in args.corpus or ():
        try:
            idx = _load_index_or_corpus(corpus) if corpus else None
            if idx is not None:
                problems += [f"corpus {corpus}: {p}" for p in check_corpus(idx.docs)]
        except (OSError, ValueError, TorError, KeyError) as exc:
            problems.append(f"corpus {corpus}: {exc}")
    templates = TemplateSet(args.templates)
    problems += [f"templates: {p}" for p in templates.check()]
    if args.transcript:
        try:
            entries = load_transcript(args.transcript)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            problems.append(f"transcript: {exc}")
        else:
            if cases is not None:
                problems += _dry_run(args, cases, pool or default_label_pool(), entries, templates)
    return problems


def _dry_run(args, cases, pool, entries, templates) -> list[str]:
    cfg = resolve_config(args)
    cfg["corpus"] = args.corpus[0] if args.corpus else None
    config = run_config(cfg)
    backend = ScriptedBackend(entries, strict=True)
    batch = run_batch(cases, pool, config, backend, build_retriever(cfg), templates)
    problems = [f"transcript: case {f.case_id}: {f.error}" for f in batch.failures]
    for i in backend.remaining():
        e = entries[i]
        problems.append(f"transcript: entry {i + 1} (tag {e.tag!r}) is never consumed")
    return problems


def cmd_validate(args: argparse.Namespace) -> int:
    problems = validate_inputs(args)
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return 1 if problems else 0


COMMANDS = {
    "run": cmd_run,
    "record": cmd_run,
    "gen-cases": cmd_gen_cases,
    "index": cmd_index,
    "tree": cmd_tree,
    "eval": cmd_eval,
    "validate": cmd_validate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (TorError, OSError, ValueError) as exc:
        print(f"tor: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
