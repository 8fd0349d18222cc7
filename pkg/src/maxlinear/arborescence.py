"""Chu-Liu/Edmonds optimum spanning arborescences.

Edge weights may be floats or tuples of floats; tuples are compared
lexicographically and added componentwise, which lets a secondary score
break exact ties in the primary one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class NoArborescenceError(ValueError):
    """No spanning arborescence exists over the usable edges."""

    def __init__(self, unreachable, root=None):
        self.unreachable = sorted(unreachable)
        self.root = root
        where = "from any root" if root is None else f"from root {root}"
        super().__init__(
            f"no spanning arborescence {where}; unreachable nodes: {self.unreachable}"
        )


def _sub(a, b):
    if isinstance(a, tuple):
        return tuple(x - y for x, y in zip(a, b))
    return a - b


def _total(weights):
    """Exactly rounded componentwise sum."""
    weights = list(weights)
    if weights and isinstance(weights[0], tuple):
        return tuple(math.fsum(w[k] for w in weights) for k in range(len(weights[0])))
    return math.fsum(weights)


def _nkey(u):
    return (0, u, "") if isinstance(u, int) else (1, 0, repr(u))


def _find_cycle(parent):
    color = {}
    for start in sorted(parent, key=_nkey):
        path = []
        v = start
        while v in parent and v not in color:
            color[v] = start
            path.append(v)
            v = parent[v]
        if v in color and color[v] == start:
            return path[path.index(v):]
    return None


def _edmonds(nodes, edges, root):
    """``edges``: dict ``(u, v) -> weight`` for ``u -> v``. Returns ``{child: parent}``."""
    best = {}
    for (u, v), w in edges.items():
        if v == root or u == v:
            continue
        cur = best.get(v)
        # prefer larger weight, then smaller parent index
        if cur is None or w > cur[0] or (w == cur[0] and _nkey(u) < _nkey(cur[1])):
            best[v] = (w, u)
    missing = [v for v in nodes if v != root and v not in best]
    if missing:
        raise NoArborescenceError(missing, root)
    parent = {v: u for v, (_, u) in best.items()}
    cycle = _find_cycle(parent)
    if cycle is None:
        return parent

    in_cycle = set(cycle)
    new_node = ("cycle", len(nodes), min(cycle, key=_nkey))
    new_edges = {}
    origin = {}
    for (u, v), w in edges.items():
        if u in in_cycle and v in in_cycle:
            continue
        if v in in_cycle:
            key = (u, new_node)
            w = _sub(w, best[v][0])
        elif u in in_cycle:
            key = (new_node, v)
        else:
            key = (u, v)
        if key not in new_edges or w > new_edges[key] or (w == new_edges[key] and repr((u, v)) < repr(origin[key])):
            new_edges[key] = w
            origin[key] = (u, v)
    new_nodes = [v for v in nodes if v not in in_cycle] + [new_node]
    sub = _edmonds(new_nodes, new_edges, root)

    result = {}
    for v, u in sub.items():
        ou, ov = origin[(u, v)]
        result[ov] = ou
    for v in cycle:
        if v not in result:
            result[v] = parent[v]
    return result


def _reachable(d, usable, root):
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for v in np.flatnonzero(usable[:, u]):
            v = int(v)
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


@dataclass
class Arborescence:
    """Spanning directed tree given by a parent map.

    ``parent[root]`` is ``-1``; ``coef[(parent, child)]`` holds an estimated
    edge coefficient when the scorer provides one.
    """

    root: int
    parent: list
    weight: object = None
    coef: dict = field(default_factory=dict)

    def __post_init__(self):
        d = len(self.parent)
        if self.parent[self.root] != -1:
            raise ValueError("root must have parent -1")
        for v in range(d):
            seen = set()
            u = v
            while u != self.root:
                if u in seen or not 0 <= self.parent[u] < d:
                    raise ValueError("parent map is not a spanning arborescence")
                seen.add(u)
                u = self.parent[u]

    @property
    def d(self):
        return len(self.parent)

    def edges(self):
        """``(parent, child)`` pairs sorted by child."""
        return [(p, c) for c, p in enumerate(self.parent) if p >= 0]

    def to_dag(self):
        from .dag import Dag

        return Dag(self.d, frozenset((c, p) for p, c in self.edges()))


def arborescence_weight(W, parent):
    return _total(W[c][p] for c, p in enumerate(parent) if p >= 0)


def edmonds_arborescence(scores, usable=None, objective="maximize", root=None, secondary=None):
    """Optimum spanning arborescence for an edge score matrix.

    Parameters
    ----------
    scores : (d, d) array
        ``scores[i, j]`` scores the edge ``j -> i`` (``j`` parent of ``i``).
    usable : (d, d) bool array, optional
        Edges allowed in the tree; defaults to the finite off-diagonal entries.
    objective : {"maximize", "minimize"}
    root : int, optional
        Fix the root. Otherwise every root is tried and the best total wins,
        ties going to the smaller root index.
    secondary : (d, d) array, optional
        Lexicographic tie-break score, optimized in the same direction.

    Returns
    -------
    Arborescence
    """
    S = np.asarray(scores, dtype=float)
    d = S.shape[0]
    if S.shape != (d, d):
        raise ValueError("scores must be square")
    if usable is None:
        usable = np.isfinite(S)
    usable = np.asarray(usable, dtype=bool) & ~np.eye(d, dtype=bool)
    if objective not in ("maximize", "minimize"):
        raise ValueError("objective must be 'maximize' or 'minimize'")
    sign = 1.0 if objective == "maximize" else -1.0

    def weight(i, j):
        w = sign * S[i, j]
        if secondary is not None:
            return (w, sign * float(secondary[i, j]))
        return w

    W = [[weight(i, j) if usable[i, j] else None for j in range(d)] for i in range(d)]
    edges = {(j, i): W[i][j] for i in range(d) for j in range(d) if usable[i, j]}

    roots = range(d) if root is None else [root]
    best = None
    fewest_missing = None
    for r in roots:
        reach = _reachable(d, usable, r)
        if len(reach) < d:
            missing = set(range(d)) - reach
            if fewest_missing is None or len(missing) < len(fewest_missing):
                fewest_missing = missing
            continue
        pmap = _edmonds(list(range(d)), edges, r)
        parent = [-1] * d
        for c, p in pmap.items():
            parent[c] = p
        total = arborescence_weight(W, parent)
        if best is None or total > best[0]:
            best = (total, r, parent)
    if best is None:
        raise NoArborescenceError(fewest_missing, root)
    total, r, parent = best
    primary = total[0] if isinstance(total, tuple) else total
    return Arborescence(r, parent, weight=sign * primary)
