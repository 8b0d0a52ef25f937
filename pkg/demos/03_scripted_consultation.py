"""One full consultation against a scripted stand-in for a model.

The backend answers by matching call tags, so the whole multi-agent exchange
runs offline: initial trees, a round of participation votes, one opinion, a
revised tree, then the moderator's decision. The trace is printed at the end.
"""

import json

from tor import RunConfig, ScriptedBackend, TranscriptEntry, default_label_pool, generate_cases, render_tree, run_case
from tor.cases import build_options
from tor.roles import AgentRole

OUTPATIENT = AgentRole.OUTPATIENT


def tree(title, *labels):
    lines = [title]
    for label in labels:
        lines += [f"    {label}", "        Analysis: Consistent with the findings.", "            Evidence 1: See case data."]
    return "\n".join(lines) + "\n"


case = generate_cases(1, seed=10)[0]
config = RunConfig(k=1, t=1, seed=3)
pool = default_label_pool()

# run_case uses config.seed as is (run_batch would derive a per-case seed), so the
# script can build the same options up front and answer with real letters.
options = build_options(case, pool, config.distractor_count, config.seed)
gold = [i for i in options.items if i.is_gold]
decoy = next(i for i in options.items if not i.is_gold)
print(f"Case {case.case_id}: {case.age}-year-old {case.sex}, {case.department}")
print("Options:", ", ".join(f"{i.letter}. {i.label}" for i in options.items), "\n")

first_guess = tree("Reasoning Pathway", gold[0].label, decoy.label)
revised = tree("Revised Reasoning Pathway", *(g.label for g in gold))
backend = ScriptedBackend([
    TranscriptEntry(first_guess, tag="outpatient/initial"),
    TranscriptEntry(revised, tag="*/initial"),
    TranscriptEntry("Yes: Outpatient. The decoy diagnosis is not supported.", tag="pathology/participate/*"),
    TranscriptEntry("No", tag="*/participate/*"),
    TranscriptEntry(f"The histology does not support {decoy.label}; please drop it.", tag="*/opinion-*"),
    TranscriptEntry(revised, tag="outpatient/update/*"),
    TranscriptEntry(json.dumps({"selected_options": ",".join(g.letter for g in gold), "evi_tree": revised}),
                    tag="moderator/final"),
], strict=False)

result = run_case(case, pool, config, backend)

print("Outpatient tree before discussion:\n" + render_tree(result.initial_views[OUTPATIENT]))
for op in result.interactions:
    print(f"Round {op.round}.{op.turn}: {op.source.display} -> {op.target.display}: {op.text}")
print("\nOutpatient tree after discussion:\n" + render_tree(result.final_views[OUTPATIENT]))
print("Selected:", result.final.selected_letters, " gold:", options.gold_letters)
print("Metrics:", result.score.metrics())
print(f"\n{backend.calls} model calls:")
for tag in result.trace.call_tags():
    print("  ", tag)
