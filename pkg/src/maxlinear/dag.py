"""Directed acyclic graphs on nodes ``0..d-1``.

Edges are stored as ``(child, parent)`` pairs, matching the row/column
convention of coefficient matrices: ``C[child, parent] > 0`` means
``parent -> child``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class CycleError(ValueError):
    """Raised when an edge set contains a directed cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        path = " -> ".join(str(v) for v in self.cycle + self.cycle[:1])
        super().__init__(f"graph contains a directed cycle: {path}")


@dataclass(frozen=True)
class Dag:
    """A directed acyclic graph.

    Parameters
    ----------
    d : int
        Number of nodes.
    edges : iterable of (child, parent)
        ``(i, j)`` means ``j -> i``.
    """

    d: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < self.d and 0 <= j < self.d):
                raise ValueError(f"edge ({i}, {j}) out of range for d={self.d}")
            if i == j:
                raise CycleError([i])
        object.__setattr__(self, "edges", edges)
        # validates acyclicity eagerly
        object.__setattr__(self, "_order", _topological_order(self.d, edges))

    @classmethod
    def from_parent_child(cls, d, pairs):
        """Build from ``(parent, child)`` pairs, the edge-list file order."""
        return cls(d, frozenset((c, p) for p, c in pairs))

    @classmethod
    def from_matrix(cls, C):
        C = np.asarray(C)
        rows, cols = np.nonzero(C)
        return cls(C.shape[0], frozenset(zip(rows.tolist(), cols.tolist())))

    def parents(self, i):
        return sorted(j for c, j in self.edges if c == i)

    def children(self, j):
        return sorted(c for c, p in self.edges if p == j)

    def adjacency(self):
        """Boolean matrix ``A`` with ``A[i, j]`` true iff ``j -> i``."""
        A = np.zeros((self.d, self.d), dtype=bool)
        for i, j in self.edges:
            A[i, j] = True
        return A

    def topological_order(self):
        """Node order with every parent before its children."""
        return list(self._order)

    def ancestor_matrix(self):
        """``M[i, j]`` true iff ``j`` is a strict ancestor of ``i``."""
        M = np.zeros((self.d, self.d), dtype=bool)
        for i in self._order:
            for j in self.parents(i):
                M[i, j] = True
                M[i] |= M[j]
        return M

    def descendant_matrix(self):
        """``M[i, j]`` true iff ``j`` is a strict descendant of ``i``."""
        return self.ancestor_matrix().T.copy()

    def ancestors(self, i):
        return set(np.flatnonzero(self.ancestor_matrix()[i]).tolist())

    def is_tree(self):
        """True for a spanning arborescence: one root, every other node one parent."""
        if len(self.edges) != self.d - 1:
            return False
        indeg = np.bincount([i for i, _ in self.edges], minlength=self.d)
        return int((indeg == 0).sum()) == 1 and bool((indeg <= 1).all())


def _topological_order(d, edges):
    children = [[] for _ in range(d)]
    indeg = [0] * d
    for i, j in edges:
        children[j].append(i)
        indeg[i] += 1
    ready = [v for v in range(d) if indeg[v] == 0]
    order = []
    while ready:
        v = min(ready)
        ready.remove(v)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) < d:
        raise CycleError(_find_cycle(d, edges, set(order)))
    return tuple(order)


def _find_cycle(d, edges, done):
    parents = {v: [] for v in range(d)}
    for i, j in edges:
        if i not in done and j not in done:
            parents[i].append(j)
    # every remaining node has a remaining parent; walk upward until a repeat
    v = min(set(range(d)) - done)
    seen = {}
    path = []
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = min(parents[v])
    cycle = path[seen[v]:]
    return cycle[::-1]


def dag_queries(dag):
    """Topological order, ancestor matrix and descendant matrix of ``dag``."""
    return {
        "order": dag.topological_order(),
        "ancestors": dag.ancestor_matrix(),
        "descendants": dag.descendant_matrix(),
    }
