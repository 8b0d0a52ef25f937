import json
import os
from pathlib import Path

import pytest

from tor.agents import (
    NOT_PERFORMED,
    Agents,
    OpinionRecord,
    Situation,
    parse_decision,
    parse_letters,
    read_yes_no,
    render_feedback,
)
from tor.cases import DiagnosisOptions, OptionItem, RoleInput, generate_cases, slice_for_role
from tor.errors import AgentError, FinalDecisionError
from tor.evidence_tree import parse_tree, render_tree
from tor.llm import ScriptedBackend, TranscriptEntry
from tor.retrieval import NO_REFERENCES, RetrievedDoc
from tor.roles import SPECIALISTS, AgentRole
from tor.trace import Trace

from oracles import MALFORMED, tree_text

GOLDEN = Path(__file__).parent / "golden"
O, L, R, P = SPECIALISTS
M = AgentRole.MODERATOR

TREE = tree_text("Laboratory Test Clinical Reasoning Pathway", ["Iron Deficiency Anemia"])


def agents_with(*responses, strict=False):
    backend = ScriptedBackend([TranscriptEntry(r) for r in responses], strict=strict)
    return Agents(backend, trace=Trace()), backend


def situation(views=None, rnd=1, turn=2):
    if views is None:
        views = {r: parse_tree(tree_text(f"{r.display} Pathway", ["Anemia"])) for r in SPECIALISTS}
    return Situation('{"age": 60}', rnd, turn, views)


def options(n=4, gold="AC"):
    return DiagnosisOptions(tuple(OptionItem(chr(65 + i), f"Disease {i}", chr(65 + i) in gold) for i in range(n)))


# -- prompts ----------------------------------------------------------------------


def outpatient_input():
    return RoleInput(O, (
        ("age", "63"), ("sex", "male"), ("chief_complaints", "Epigastric pain for 2 months"),
        ("present_illness", "Pain after meals, weight loss 4 kg"),
        ("physical_examination", "Mild epigastric tenderness"),
    ))


def test_outpatient_prompt_has_field_headings():
    prompt = Agents(ScriptedBackend([])).render_initial_prompt(O, outpatient_input(), [])
    for heading in ("Age", "Sex", "Chief-Complaints", "Present-Illness", "Physical-Examination"):
        assert heading in prompt
    assert NO_REFERENCES in prompt


def test_outpatient_prompt_golden_file():
    docs = [RetrievedDoc("pm-1", 3.2, "Gastric cancer often presents with epigastric pain."),
            RetrievedDoc("sp-7", 1.1, "Weight loss is a red-flag symptom.")]
    prompt = Agents(ScriptedBackend([])).render_initial_prompt(O, outpatient_input(), docs)
    golden = GOLDEN / "outpatient_prompt.txt"
    if os.environ.get("UPDATE_GOLDEN"):
        golden.write_text(prompt, encoding="utf-8")
    assert prompt == golden.read_text(encoding="utf-8")


def test_prompt_isolation_and_empty_modality():
    case = generate_cases(1, 6)[0]
    a = Agents(ScriptedBackend([]))
    lab = a.render_initial_prompt(L, slice_for_role(case, L, SPECIALISTS), [])
    assert case.chief_complaints not in lab
    empty = RoleInput(P, (("pathology_results", ""),))
    assert NOT_PERFORMED in a.render_initial_prompt(P, empty, [])


def test_reassigned_sections_reach_the_outpatient_prompt():
    case = generate_cases(1, 2)[0]
    prompt = Agents(ScriptedBackend([])).render_initial_prompt(O, slice_for_role(case, O, {O}), [])
    assert "Imaging test results" in prompt and "Pathology test results" in prompt


def test_moderator_has_no_initial_prompt():
    with pytest.raises(AgentError):
        Agents(ScriptedBackend([])).render_initial_prompt(M, outpatient_input(), [])


# -- initial diagnosis ------------------------------------------------------------


def test_initial_diagnosis_parses_canonical_text():
    a, b = agents_with(TREE)
    tree = a.initial_diagnosis(L, RoleInput(L, (("lab_results", "ferritin 8"),)), [])
    assert render_tree(tree) == TREE
    assert b.requests[0].tag == "laboratory/initial"
    assert b.requests[0].messages[0].role == "system"


def test_one_repair_then_success():
    a, b = agents_with(MALFORMED, TREE, strict=True)
    tree = a.initial_diagnosis(L, RoleInput(L, (("lab_results", "x"),)), [])
    assert tree.entries[0].disease_label == "Iron Deficiency Anemia"
    assert len(a.trace.of("repair")) == 1
    assert [r.tag for r in b.requests] == ["laboratory/initial", "laboratory/initial-repair"]
    repair = b.requests[1].messages
    assert repair[-2].content == MALFORMED
    assert repair[-1].content.startswith("Your previous output did not match the required format")


def test_repairs_exhausted():
    a, b = agents_with(*[MALFORMED] * 3, strict=True)
    with pytest.raises(AgentError) as err:
        a.initial_diagnosis(L, RoleInput(L, (("lab_results", "x"),)), [])
    assert err.value.reason == "ParseFailureAfterRepairs"
    assert b.calls == 3


# -- participation and targets ------------------------------------------------------


@pytest.mark.parametrize("answer, flag", [
    ("Yes", True), ("no.", False), ("  YES, radiology", True), ("**No**", False), ("Nope", None), ("Maybe", None),
])
def test_read_yes_no(answer, flag):
    assert read_yes_no(answer) is flag


def test_should_participate_yes():
    a, _ = agents_with("Yes")
    assert a.should_participate(L, situation()) == (True, "Yes")


def test_unreadable_then_no_is_false_with_anomaly():
    a, b = agents_with("Maybe", "No", strict=True)
    flag, _ = a.should_participate(L, situation())
    assert flag is False
    assert a.trace.of("anomaly")
    assert [r.tag for r in b.requests] == ["laboratory/participate/1.2", "laboratory/participate-repair/1.2"]


def test_should_participate_never_raises():
    a, _ = agents_with(strict=True)  # empty transcript: every call fails
    assert a.should_participate(L, situation()) == (False, "")


def test_targets_from_answer():
    a, b = agents_with()
    assert a.choose_targets(O, situation(), "Yes: Radiology, Pathology") == [R, P]
    assert b.calls == 0


def test_self_target_is_dropped():
    a, _ = agents_with()
    assert a.choose_targets(O, situation(), "Yes: outpatient and laboratory") == [L]


def test_misspelled_target_falls_back_to_conflicts():
    views = {
        O: parse_tree(tree_text("O", ["Anemia", "Gastritis"])),
        L: parse_tree(tree_text("L", ["anemia", "gastritis."])),
        R: parse_tree(tree_text("R", ["Anemia"])),
        P: parse_tree(tree_text("P", ["Lymphoma"])),
    }
    a, _ = agents_with()
    assert a.choose_targets(O, situation(views), "Yes: Radiolgy") == [R, P]
    assert a.trace.of("anomaly")


# -- opinions and updates -----------------------------------------------------------


def test_opinion_text_is_verbatim_and_prompt_has_round_turn():
    text = "  Consider iron studies.\n\nAlso CEA.  "
    a, b = agents_with(text)
    op = a.generate_opinion(L, R, situation(rnd=2, turn=1))
    assert op.text == text
    assert (op.round, op.turn, op.source, op.target) == (2, 1, L, R)
    assert "Round 2, Turn 1" in b.requests[0].text
    assert b.requests[0].tag == "laboratory/opinion-radiology/2.1"


def test_opinion_record_invariants():
    with pytest.raises(ValueError):
        OpinionRecord(1, 1, L, L, "x")
    with pytest.raises(ValueError):
        OpinionRecord(1, 1, M, L, "x")


def test_update_without_feedback_is_identity_and_silent():
    a, b = agents_with()
    original = parse_tree(TREE)
    other_round = [OpinionRecord(1, 1, O, L, "old")]
    assert a.update_tree(L, original, [], 1) is original
    assert a.update_tree(L, original, other_round, 2) is original
    assert a.update_tree(R, original, other_round, 1) is original
    assert b.calls == 0


def test_update_replaces_tree():
    new = tree_text("Revised", ["Anemia of chronic disease"])
    a, b = agents_with(new)
    out = a.update_tree(L, parse_tree(TREE), [OpinionRecord(1, 1, O, L, "Check CRP.")], 1)
    assert render_tree(out) == new
    assert "Check CRP." in b.requests[0].text
    assert b.requests[0].tag == "laboratory/update/1"


def test_update_failure_keeps_original():
    a, _ = agents_with(*[MALFORMED] * 3, strict=True)
    original = parse_tree(TREE)
    assert a.update_tree(L, original, [OpinionRecord(1, 1, O, L, "x")], 1) is original
    assert any(e.payload.get("kept_original") for e in a.trace.of("anomaly"))


def test_feedback_grouped_by_source():
    fb = [OpinionRecord(1, 2, R, L, "r2"), OpinionRecord(1, 1, O, L, "o1"), OpinionRecord(1, 1, R, L, "r1")]
    text = render_feedback(fb)
    assert text.index("Outpatient") < text.index("Radiology")
    assert text.index("r1") < text.index("r2")


# -- final decision --------------------------------------------------------------------


@pytest.mark.parametrize("value, expected", [
    ("A", ["A"]), ("A,C", ["A", "C"]), ("AC", ["A", "C"]), (["C", "A"], ["C", "A"]), ("a", ["A"]),
    ("A and D", ["A", "D"]),
])
def test_parse_letters(value, expected):
    assert parse_letters(value, "ABCD") == expected


def final_json(letters="A,C", tree=None):
    return json.dumps({"selected_options": letters, "evi_tree": tree or TREE})


def test_parse_decision_basic():
    d = parse_decision(final_json(), options())
    assert d.selected_letters == ("A", "C")
    assert d.merged_tree == parse_tree(TREE)


def test_unknown_letters_are_dropped_or_rejected():
    assert parse_decision(final_json("A,Z"), options()).selected_letters == ("A",)
    with pytest.raises(FinalDecisionError) as err:
        parse_decision(final_json("Z"), options())
    assert err.value.kind == "NoValidLetters"


@pytest.mark.parametrize("wrap", [
    lambda s: f"```json\n{s}\n```",
    lambda s: f"```\n{s}```",
    lambda s: f"Here is my decision:\n```json\n{s}\n```\nThanks.",
    lambda s: f"Decision: {s}",
    lambda s: s.replace('", "', '",\n  "'),
])
def test_fenced_and_wrapped_json(wrap):
    assert parse_decision(wrap(final_json()), options()).selected_letters == ("A", "C")


def test_evi_tree_as_object():
    doc = {"selected_options": ["B"], "evi_tree": {"title": "T", "entries": [
        {"disease": "Anemia", "analysis": "a", "evidence": ["e"]}]}}
    assert parse_decision(json.dumps(doc), options()).selected_letters == ("B",)


@pytest.mark.parametrize("text", ["no json here", '{"selected_options": "A"}', '{"selected_options": "A", "evi_tree": "x"}'])
def test_unparseable(text):
    with pytest.raises(FinalDecisionError) as err:
        parse_decision(text, options())
    assert err.value.kind == "Unparseable"


def test_final_decision_repairs_then_succeeds():
    case = generate_cases(1, 0)[0]
    a, b = agents_with("oops", final_json("C"), strict=True)
    views = {r: parse_tree(TREE) for r in SPECIALISTS}
    d = a.final_decision(case, views, options())
    assert d.selected_letters == ("C",)
    assert [r.tag for r in b.requests] == ["moderator/final", "moderator/final-repair"]
    assert b.requests[0].messages[0].content == "You are the head of the medical team."
    assert "A. Disease 0" in b.requests[0].text
