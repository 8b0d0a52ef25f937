"""Scoring selections against gold letters, micro vs macro averaging, and rater scores."""

import csv
import tempfile
from pathlib import Path

from tor import aggregate, f1
from tor.evaluation import import_human_scores, score_letters

# Three cases: one easy single-label case and two harder multi-label ones.
scores = [
    ("case-1", score_letters("A", "A")),       # perfect
    ("case-2", score_letters("AB", "ABCD")),   # cautious: high precision, half recall
    ("case-3", score_letters("ABCE", "AC")),   # eager: full recall, half precision
]
for cid, s in scores:
    print(f"{cid}: tp={s.tp} fp={s.fp} fn={s.fn}  P={s.precision:6.2f} R={s.recall:6.2f} F1={s.f1:6.2f}")

report = aggregate(scores)
m, M = report.micro, report.macro
print(f"\nmicro (pooled counts): P={m.precision:.2f} R={m.recall:.2f} F1={m.f1:.2f}")
print(f"macro (mean per case): P={M.precision:.2f} R={M.recall:.2f} F1={M.f1:.2f}")
print("Micro weights cases by how many labels they carry; macro weights every case equally.")

print("\nF1 is the harmonic mean, so a lopsided system pays for its weak side:")
for p, r in [(90, 90), (95.7, 46.6), (99, 10)]:
    print(f"  P={p:5.1f} R={r:5.1f} -> F1={f1(p, r):5.2f}")

with tempfile.TemporaryDirectory() as tmp:
    sheet = Path(tmp) / "raters.csv"
    with open(sheet, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case_id", "relevance", "completeness"])
        w.writerows([["case-1", 5, 4.5], ["case-2", 4, 3], ["case-3", 3.5, 4]])
    report = import_human_scores(report, sheet)

print()
print(report.to_table())
