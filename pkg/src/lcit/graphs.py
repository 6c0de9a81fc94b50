"""Ground-truth DAGs, d-separation, and extraction of labelled CI triplets."""

from collections import deque
from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Triplet:
    x: str
    y: str
    z: tuple
    label: str  # "independent" or "dependent"


class DAG:
    """Directed acyclic graph over named nodes."""

    def __init__(self, nodes=(), edges=()):
        self.nodes = list(dict.fromkeys(nodes))
        self._parents = {v: set() for v in self.nodes}
        self._children = {v: set() for v in self.nodes}
        for s, t in edges:
            self.add_edge(s, t)
        if not self.is_acyclic():
            raise GraphError("graph contains a directed cycle")

    def add_edge(self, s, t):
        for v in (s, t):
            if v not in self._parents:
                self.nodes.append(v)
                self._parents[v] = set()
                self._children[v] = set()
        if s == t:
            raise GraphError(f"self loop on {s!r}")
        self._parents[t].add(s)
        self._children[s].add(t)

    @property
    def edges(self):
        return sorted((s, t) for s in self.nodes for t in self._children[s])

    def parents(self, v):
        return set(self._parents[v])

    def children(self, v):
        return set(self._children[v])

    def adjacent(self, a, b):
        return b in self._children[a] or a in self._children[b]

    def _reach(self, start, step):
        seen = set()
        todo = list(start)
        while todo:
            v = todo.pop()
            for w in step[v]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return seen

    def descendants(self, v):
        return self._reach([v], self._children)

    def ancestors(self, vs):
        return self._reach(list(vs), self._parents)

    def is_acyclic(self):
        indeg = {v: len(self._parents[v]) for v in self.nodes}
        queue = deque(v for v, k in indeg.items() if k == 0)
        seen = 0
        while queue:
            v = queue.popleft()
            seen += 1
            for w in self._children[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
        return seen == len(self.nodes)

    def d_separated(self, x, y, z):
        """Whether ``x`` and ``y`` are d-separated by the set ``z``.

        Uses the moral graph of the ancestral set of ``{x, y} | z``.
        """
        z = set(z)
        keep = self.ancestors([x, y, *z]) | {x, y} | z
        nbrs = {v: set() for v in keep}
        for v in keep:
            pa = self._parents[v] & keep
            for p in pa:
                nbrs[v].add(p)
                nbrs[p].add(v)
            pa = sorted(pa, key=str)
            for i, p in enumerate(pa):
                for q in pa[i + 1:]:
                    nbrs[p].add(q)
                    nbrs[q].add(p)
        seen = {x}
        todo = [x]
        while todo:
            v = todo.pop()
            for w in nbrs[v]:
                if w == y:
                    return False
                if w not in seen and w not in z:
                    seen.add(w)
                    todo.append(w)
        return True

    @classmethod
    def random(cls, n_nodes, edge_prob, seed=None):
        rng = np.random.default_rng(seed)
        order = rng.permutation(n_nodes)
        names = [f"v{i}" for i in range(n_nodes)]
        edges = [(names[order[i]], names[order[j]])
                 for i in range(n_nodes) for j in range(i + 1, n_nodes)
                 if rng.random() < edge_prob]
        return cls(names, edges)


def read_edge_list(path):
    """Parse ``source<TAB>target`` lines; blank lines and ``#`` comments are skipped."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not all(p.strip() for p in parts):
                raise GraphError(f"{path}:{lineno}: expected 'source<TAB>target'")
            edges.append((parts[0].strip(), parts[1].strip()))
    return DAG(edges=edges)


def extract_triplets(graph, n_ci, n_dep, seed=None):
    """Sample labelled ``(x, y, z)`` triplets from a ground-truth DAG.

    Non-adjacent pairs are labelled independent given the union of their
    parents. Adjacent pairs are labelled dependent, with a conditioning set
    drawn uniformly from the subsets of nodes that descend from neither
    endpoint.

    Raises
    ------
    GraphError
        If the graph has fewer eligible pairs than requested.
    """
    rng = np.random.default_rng(seed)
    nodes = list(graph.nodes)
    pairs = [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]]
    adj = [p for p in pairs if graph.adjacent(*p)]
    non = [p for p in pairs if not graph.adjacent(*p)]
    if len(non) < n_ci or len(adj) < n_dep:
        raise GraphError(
            f"requested {n_ci} independent / {n_dep} dependent triplets, "
            f"graph offers {len(non)} / {len(adj)}")
    out = []
    for k in rng.choice(len(non), size=n_ci, replace=False):
        a, b = non[k]
        z = graph.parents(a) | graph.parents(b)
        out.append(Triplet(a, b, tuple(sorted(z, key=nodes.index)), "independent"))
    for k in rng.choice(len(adj), size=n_dep, replace=False):
        a, b = adj[k]
        banned = graph.descendants(a) | graph.descendants(b) | {a, b}
        pool = [v for v in nodes if v not in banned]
        z = [v for v in pool if rng.random() < 0.5]
        out.append(Triplet(a, b, tuple(z), "dependent"))
    order = rng.permutation(len(out))
    return [out[i] for i in order]
