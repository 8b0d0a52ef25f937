"""Evidence trees: lenient parsing, canonical rendering, merging and diffing.

Models rarely emit the exact indentation we ask for. This walk-through feeds
the parser three differently formatted answers and shows they collapse to the
same canonical tree, then pools them and lists where the specialists disagree.
"""

from tor import diff_trees, merge_trees, parse_tree, render_tree

chatty = """Sure! Here is my reasoning.

Laboratory Test Clinical Reasoning Pathway
  - **Iron Deficiency Anemia**
    - Analysis: Low ferritin with microcytosis.
      - Evidence 1: Ferritin 8 ng/mL
      - Evidence 2: MCV 71 fL
Hope this helps."""

dirtree = """\
.1 Imaging Test Clinical Reasoning Pathway.
.2 Gastric Cancer.
.3 Analysis: Irregular antral wall thickening.
.4 Evidence 1: CT shows a 3 cm antral mass.
.2 iron deficiency anemia
.3 Analysis: Chronic occult blood loss is plausible.
.4 Evidence 1: Mucosal ulceration on CT.
"""

boxes = """Pathology Clinical Reasoning Pathway
├── Gastric Cancer
│   ├── Analysis: Biopsy confirms adenocarcinoma.
│   │   ├── Evidence 1: Signet ring cells on histology
"""

lab, img, path = (parse_tree(t) for t in (chatty, dirtree, boxes))

print("Canonical form of the chatty laboratory answer:\n")
print(render_tree(lab))

print("Labels are compared after normalisation, so case and trailing dots do not matter:")
print("  imaging labels:", sorted(img.labels))

pooled = merge_trees([lab, img, path], "Pooled Reasoning Pathway")
print("\nPooled tree across the three specialists:\n")
print(render_tree(pooled))

c = diff_trees(lab, img)
print("Laboratory vs imaging")
print("  only laboratory:", sorted(c.only_in_left))
print("  only imaging:   ", sorted(c.only_in_right))
print("  shared:         ", sorted(c.shared))
print("  conflict?       ", c.has_conflict)
