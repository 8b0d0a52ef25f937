import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tor.agents import FinalDecision
from tor.cases import DiagnosisOptions, OptionItem, option_letter
from tor.errors import EmptyBatch, SchemaError
from tor.evaluation import (
    CaseScore,
    aggregate,
    f1,
    import_human_scores,
    precision,
    recall,
    report_from_dict,
    score_case,
    score_letters,
)
from tor.evidence_tree import EvidenceTree, make_entry

import oracles
from published import F1_TOLERANCE, RESULTS_TABLE

TREE = EvidenceTree("T", (make_entry("D", "a", ["e"]),))


def decision(letters):
    return FinalDecision(tuple(letters), TREE, "")


def opts(gold, n):
    return DiagnosisOptions(tuple(OptionItem(option_letter(i), f"L{i}", option_letter(i) in gold) for i in range(n)))


@pytest.mark.parametrize("name, p, r, published", RESULTS_TABLE, ids=[row[0] for row in RESULTS_TABLE])
def test_published_f1_arithmetic(name, p, r, published):
    assert abs(f1(p, r) - published) <= F1_TOLERANCE


def test_score_examples():
    assert score_case(decision("AB"), opts("AB", 4)) == CaseScore(2, 0, 0)
    assert score_case(decision("AC"), opts("AB", 4)) == CaseScore(1, 1, 1)


def test_letters_outside_options_rejected():
    with pytest.raises(ValueError):
        score_case(decision("Z"), opts("A", 4))


def test_brute_force_confusion_scan():
    rng = random.Random(0)
    for _ in range(2000):
        n = rng.randint(2, 30)
        letters = [option_letter(i) for i in range(n)]
        gold = set(rng.sample(letters, rng.randint(1, n - 1)))
        selected = set(rng.sample(letters, rng.randint(1, n)))
        s = score_case(decision(sorted(selected)), opts(gold, n))
        assert (s.tp, s.fp, s.fn) == oracles.confusion_scan(letters, gold, selected)
        assert s.tp + s.fn == len(gold) and s.tp + s.fp == len(selected)


def test_zero_denominators():
    assert precision(0, 0) == 0 and recall(0, 0) == 0 and f1(0, 0) == 0
    assert CaseScore(0, 0, 3).f1 == 0


@given(st.floats(0, 100), st.floats(0, 100))
def test_f1_bounds(p, r):
    value = f1(p, r)
    assert 0 <= value <= (p + r) / 2 + 1e-9
    assert value == pytest.approx(oracles.f1_oracle(p, r), abs=1e-9)
    if abs(p - r) > 1e-6:
        assert value < (p + r) / 2


@given(st.floats(0.001, 100))
def test_f1_fixed_point(x):
    assert f1(x, x) == pytest.approx(x)


def test_aggregate_examples():
    one = aggregate([("a", CaseScore(1, 1, 2))])
    assert one.micro.precision == 50 and one.micro.recall == pytest.approx(100 / 3)
    two = aggregate([("a", CaseScore(2, 0, 0)), ("b", CaseScore(0, 2, 2))])
    assert (two.micro.precision, two.micro.recall, two.micro.f1) == (50.0, 50.0, 50.0)
    assert two.macro.f1 == 50.0
    with pytest.raises(EmptyBatch):
        aggregate([])


def test_micro_over_concatenated_batches_equals_summed_counters():
    rng = random.Random(4)
    scores = [(str(i), CaseScore(rng.randint(0, 3), rng.randint(0, 3), rng.randint(0, 3))) for i in range(40)]
    whole = aggregate(scores).micro
    tp, fp, fn = (sum(getattr(s, k) for _, s in scores) for k in ("tp", "fp", "fn"))
    assert whole.precision == precision(tp, fp) and whole.recall == recall(tp, fn)


def test_report_json_and_table():
    report = aggregate([("a", CaseScore(2, 0, 1)), ("b", CaseScore(1, 1, 0))])
    doc = report.to_dict()
    assert doc["cases"] == 2 and doc["relevance"] is None
    assert report_from_dict(doc) == report
    table = report.to_table()
    assert table.splitlines()[0].split(" | ")[1:4] == ["P.(%)", "R.(%)", "F1(%)"]
    assert "75.00" in table


def test_human_score_import(tmp_path):
    report = aggregate([("a", CaseScore(1, 0, 0)), ("b", CaseScore(1, 0, 0))])
    csv = tmp_path / "h.csv"
    csv.write_text("case_id,relevance,completeness\na,4.5,3.0\nb,4.0,4.0\n")
    amended = import_human_scores(report, csv)
    assert amended.to_dict()["relevance"] == 4.25
    row = [cell.strip() for cell in amended.to_table().splitlines()[2].split(" | ")]
    assert row[4:] == ["4.25", "3.50"]
    for bad in ("a,5.5,1\n", "a,4.25,1\n", "zz,1,1\n", "a,x,1\n"):
        csv.write_text("case_id,relevance,completeness\n" + bad)
        with pytest.raises(SchemaError):
            import_human_scores(report, csv)


def test_score_letters_is_set_arithmetic():
    assert score_letters("ABD", "AC") == CaseScore(1, 2, 1)
    assert score_letters([], "A") == CaseScore(0, 0, 1)
