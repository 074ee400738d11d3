"""
Retrieval-augmented planning
============================

A small knowledge base is indexed with hashed bag-of-words vectors. The
``rag-gated`` proposer only knows a working plan when a retrieved document
spells it out, so success flips with retrieval on and off.
"""

from bssopt.agents import DEFAULT_KB, rag_gated_proposer, run_laba
from bssopt.fixtures import standard_region
from bssopt.rag import Retriever, build_store, cosine_similarity, parse_kb

docs = parse_kb(DEFAULT_KB)
store = build_store(docs)
print(len(store), "documents:", [d.id for d in store.documents])

for hit in store.retrieve("how do I deploy stations to cover weak traffic cheaply", 3):
    print(f"  {hit.score:.3f}  {hit.document.id}")

print("cosine([1,1],[1,0]) =", cosine_similarity([1, 1], [1, 0]))

# %%
# The ablation: same proposer, same region, retrieval on and off.

region = standard_region()
retriever = Retriever(store, k=3)
print("with retrieval:   ", run_laba(region, rag_gated_proposer(), retriever=retriever).success)
print("without retrieval:", run_laba(region, rag_gated_proposer(), cap=3).success)

prompt, _ = retriever("Deploy base stations in weak coverage areas")
print(prompt[:300])
