"""BM25 over a small local corpus, and how a role's query is built from its slice of a case."""

from tor import Document, Retriever, bm25_score, generate_cases, index_corpus, retrieve_top_k, slice_for_role
from tor.roles import SPECIALISTS

docs = [
    Document("gc-01", "Gastric cancer", "Gastric cancer often presents with epigastric pain, weight loss and "
             "iron deficiency anemia from occult bleeding."),
    Document("tn-02", "Thyroid nodules", "Most thyroid nodules are benign; ultrasound features and fine needle "
             "aspiration guide management."),
    Document("ida-03", "Iron deficiency", "Low ferritin is the most specific test for iron deficiency anemia."),
    Document("crc-04", "Colorectal cancer", "Change in bowel habit, rectal bleeding and a raised CEA suggest "
             "colorectal carcinoma."),
    Document("lym-05", "Gastric lymphoma", "Primary gastric lymphoma may mimic carcinoma on endoscopy and CT."),
]
index = index_corpus(docs)

query = "epigastric pain weight loss low ferritin"
print(f"query: {query!r}\n")
for hit in retrieve_top_k(index, query, k=3, snippet_tokens=8):
    print(f"  {hit.doc_id:7s} score={hit.score:6.3f}  {hit.snippet}")

print("\nTop-k always returns min(k, N) documents, so zero scores can fill the tail.")
print("Every document scored:")
for i, d in enumerate(docs):
    print(f"  {d.doc_id:7s} {bm25_score(index, query, i):6.3f}")

# Each specialist queries with only the case sections it is allowed to see.
case = generate_cases(1, seed=4)[0]
retriever = Retriever(index, k=2, snippet_tokens=10)
print(f"\nCase {case.case_id} ({case.department})")
for role in SPECIALISTS:
    query, hits = retriever.retrieve(role, slice_for_role(case, role, SPECIALISTS))
    if not query:
        print(f"  {role.display:12s} (nothing to search with: this test was not performed)")
        continue
    print(f"  {role.display:12s} query={query[:50]!r}...")
    for h in hits:
        print(f"      -> {h.doc_id} ({h.score:.2f})")
