"""Labelled CI triplets from a ground-truth network.

Non-adjacent pairs are independent given the union of their parents;
adjacent pairs stay dependent whatever we condition on.

Run: python3 demos/05_graph_triplets.py
"""

import tempfile
from pathlib import Path

from lcit.graphs import extract_triplets, read_edge_list

edges = """# regulator\ttarget
G1\tG2
G1\tG3
G2\tG4
G3\tG4
G4\tG5
G6\tG5
"""

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "network.tsv"
    path.write_text(edges, encoding="utf-8")
    graph = read_edge_list(path)

print("nodes:", graph.nodes)
for t in extract_triplets(graph, n_ci=4, n_dep=4, seed=0):
    z = "{" + ", ".join(t.z) + "}"
    check = graph.d_separated(t.x, t.y, t.z)
    print(f"{t.label:11s} {t.x} _||_ {t.y} | {z:14s} d-separated={check}")
