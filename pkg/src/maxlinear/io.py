"""File formats: matrices, edge lists, observation CSVs, model/tree JSON, DOT.

All writers go through :func:`atomic_write` and format floats with
``repr``, the shortest decimal string that round-trips.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import innovations as inn
from .arborescence import Arborescence
from .dag import Dag
from .model import MaxLinearNetwork, ObservationSet
from .structure import evaluate


class FormatError(ValueError):
    """Malformed input file; the message names the offending location."""


def fmt_float(v):
    """Shortest round-trip decimal form; integral values keep a trailing ``.0``."""
    v = float(v)
    if v != v:
        return "nan"
    return repr(v)


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory and rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj):
    """Deterministic JSON text (sorted keys, trailing newline)."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


# -- matrices ---------------------------------------------------------------

def parse_matrix(text):
    """First token pair is ``rows cols``, then ``rows * cols`` numbers row-major."""
    tokens = text.split()
    if len(tokens) < 2:
        raise FormatError("matrix file needs a 'rows cols' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise FormatError(f"bad matrix header {tokens[0]!r} {tokens[1]!r}") from None
    if rows < 0 or cols < 0:
        raise FormatError("matrix dimensions must be nonnegative")
    body = tokens[2:]
    if len(body) != rows * cols:
        raise FormatError(f"expected {rows * cols} entries for a {rows}x{cols} matrix, found {len(body)}")
    try:
        vals = [float(t) for t in body]
    except ValueError as exc:
        raise FormatError(f"non-numeric matrix entry: {exc}") from None
    return np.array(vals, dtype=float).reshape(rows, cols)


def format_matrix(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(fmt_float(v) for v in row) for row in M]
    return "\n".join(lines) + "\n"


def read_matrix(path):
    return parse_matrix(_read_text(path))


def write_matrix(path, M):
    atomic_write(path, format_matrix(M))


# -- edge lists ---------------------------------------------------------------

def _node_index(token, labels, where):
    if labels is not None and token in labels:
        return labels.index(token)
    try:
        k = int(token)
    except ValueError:
        raise FormatError(f"{where}: unknown node label {token!r}") from None
    if k < 1 or (labels is not None and k > len(labels)):
        raise FormatError(f"{where}: node index {k} out of range (1-indexed)")
    return k - 1


def parse_edge_list(text, labels=None):
    """Lines ``parent child [coeff]``; nodes are 1-indexed integers or labels.

    Blank lines and ``#`` comments are skipped. Returns 0-indexed
    ``(parent, child, coeff)`` triples, ``coeff`` being ``None`` if absent.
    """
    labels = None if labels is None else list(labels)
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise FormatError(f"line {lineno}: expected 'parent child [coeff]', got {line!r}")
        where = f"line {lineno}"
        p = _node_index(parts[0], labels, where)
        c = _node_index(parts[1], labels, where)
        if p == c:
            raise FormatError(f"{where}: self-loop on node {parts[0]}")
        coeff = None
        if len(parts) == 3:
            try:
                coeff = float(parts[2])
            except ValueError:
                raise FormatError(f"{where}: bad coefficient {parts[2]!r}") from None
        out.append((p, c, coeff))
    return out


def read_edge_list(path, labels=None):
    return parse_edge_list(_read_text(path), labels)


def format_edge_list(edges):
    lines = []
    for e in edges:
        p, c = e[0], e[1]
        coeff = e[2] if len(e) > 2 else None
        lines.append(f"{p + 1} {c + 1}" + ("" if coeff is None else f" {fmt_float(coeff)}"))
    return "\n".join(lines) + ("\n" if lines else "")


def write_edge_list(path, edges):
    atomic_write(path, format_edge_list(edges))


def truth_from_edges(edges, d=None):
    """A :class:`Dag` from ``(parent, child, ...)`` tuples."""
    if d is None:
        d = 1 + max((max(e[0], e[1]) for e in edges), default=0)
    return Dag.from_parent_child(d, [(e[0], e[1]) for e in edges])


# -- observation CSVs ---------------------------------------------------------

def parse_csv(text, log_transform=False, source="<csv>"):
    """Header of unique labels, one row per time index, empty cell = missing."""
    # blank lines carry no cells; an all-missing row still has its commas
    rows = [row for row in csv.reader(_io.StringIO(text)) if row]
    if not rows:
        raise FormatError(f"{source}: empty file, expected a header row")
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise FormatError(f"{source}: empty column label in header")
    seen = set()
    for h in header:
        if h in seen:
            raise FormatError(f"{source}: duplicate label {h!r}")
        seen.add(h)
    d = len(header)
    values = np.full((len(rows) - 1, d), np.nan)
    for r, row in enumerate(rows[1:]):
        if len(row) != d:
            raise FormatError(f"{source}: row {r + 1} has {len(row)} cells, header has {d}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if not cell:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise FormatError(f"{source}: row {r + 1}, column {header[c]!r}: non-numeric value {cell!r}") from None
            if not np.isfinite(v):
                raise FormatError(f"{source}: row {r + 1}, column {header[c]!r}: non-finite value {cell!r}")
            if log_transform and v <= 0:
                raise FormatError(
                    f"{source}: row {r + 1}, column {header[c]!r}: value {cell} is not positive; "
                    "the log transform needs strictly positive observations"
                )
            values[r, c] = v
    obs = ObservationSet(values, None, header)
    return obs.log() if log_transform else obs


def ingest_csv(path, log_transform=False):
    """Read an observation CSV into an :class:`ObservationSet`."""
    return parse_csv(_read_text(path), log_transform, source=str(path))


def format_csv(obs, extra=None):
    """CSV text for ``obs``; ``extra`` is an optional ``(name, int array)`` column."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(obs.labels) + ([extra[0]] if extra else [])
    w.writerow(header)
    for r in range(obs.n):
        row = ["" if obs.mask[r, c] else fmt_float(obs.values[r, c]) for c in range(obs.d)]
        if extra:
            row.append(str(int(extra[1][r])))
        w.writerow(row)
    return buf.getvalue()


def export_csv(path, obs, extra=None):
    atomic_write(path, format_csv(obs, extra))


# -- model and tree JSON ------------------------------------------------------

def model_to_dict(net, labels=None):
    """``{d, edges: [{parent, child, coeff}], innovations: [{dist, params}]}``, 1-indexed."""
    out = {
        "d": net.d,
        "edges": [{"parent": p + 1, "child": c + 1, "coeff": w} for p, c, w in net.edges()],
        "innovations": [dist.to_dict() for dist in net.innovations],
    }
    if labels is not None:
        out["labels"] = list(labels)
    return out


def model_from_dict(obj):
    try:
        d = int(obj["d"])
        edges = [(int(e["parent"]) - 1, int(e["child"]) - 1, float(e["coeff"])) for e in obj.get("edges", [])]
        dists = obj.get("innovations")
        dists = None if dists is None else [inn.from_dict(s) for s in dists]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"model JSON is missing or mistypes a field: {exc}") from None
    if d < 1:
        raise FormatError("model JSON needs d >= 1")
    for p, c, _ in edges:
        if not (0 <= p < d and 0 <= c < d):
            raise FormatError(f"model JSON edge {p + 1}->{c + 1} outside 1..{d}")
    net = MaxLinearNetwork.from_edges(d, edges, dists)
    labels = obj.get("labels")
    if labels is not None and len(labels) != d:
        raise FormatError("model JSON labels must have length d")
    return net, labels


def read_model(path):
    """Returns ``(MaxLinearNetwork, labels or None)``."""
    try:
        obj = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    return model_from_dict(obj)


def write_model(path, net, labels=None):
    atomic_write(path, dumps_json(model_to_dict(net, labels)))


def tree_to_dict(tree, labels=None, method=None, params=None):
    edges = []
    for p, c in tree.edges():
        e = {"parent": p + 1, "child": c + 1}
        if (p, c) in tree.coef and np.isfinite(tree.coef[(p, c)]):
            e["coeff"] = tree.coef[(p, c)]
        edges.append(e)
    out = {"d": tree.d, "root": tree.root + 1, "edges": edges}
    if tree.weight is not None and np.isfinite(tree.weight):
        out["weight"] = float(tree.weight)
    if labels is not None:
        out["labels"] = list(labels)
    if method is not None:
        out["method"] = method
    if params:
        out["params"] = params
    return out


def tree_from_dict(obj):
    try:
        d = int(obj["d"])
        parent = [-1] * d
        coef = {}
        for e in obj["edges"]:
            p, c = int(e["parent"]) - 1, int(e["child"]) - 1
            if not (0 <= p < d and 0 <= c < d):
                raise FormatError(f"tree edge {p + 1}->{c + 1} outside 1..{d}")
            if parent[c] != -1:
                raise FormatError(f"node {c + 1} has two parents")
            parent[c] = p
            if "coeff" in e:
                coef[(p, c)] = float(e["coeff"])
        roots = [v for v in range(d) if parent[v] == -1]
        root = int(obj.get("root", roots[0] + 1 if roots else 1)) - 1
    except (KeyError, TypeError) as exc:
        raise FormatError(f"tree JSON is missing or mistypes a field: {exc}") from None
    try:
        tree = Arborescence(root, parent, obj.get("weight"), coef)
    except (ValueError, IndexError) as exc:
        raise FormatError(f"tree JSON is not a spanning arborescence: {exc}") from None
    return tree, obj.get("labels")


def read_tree(path):
    try:
        obj = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    return tree_from_dict(obj)


# -- DOT ----------------------------------------------------------------------

EDGE_STYLE = {
    "correct": 'color="blue"',
    "wrong": 'color="red"',
    "reversed": 'color="purple"',
    "missed": 'color="gray", style="dashed"',
}


def _dot_id(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _estimate_edges(estimate):
    if isinstance(estimate, Dag):
        return sorted((p, c) for c, p in estimate.edges)
    return sorted(estimate.edges())


def export_dot(estimate, truth=None, labels=None):
    """DOT text for an estimated tree (or any :class:`Dag`), colored against ``truth``.

    Estimated edges are blue (in the truth), purple (the truth has the
    reverse edge) or red (otherwise); true edges missing from the estimate
    as given are gray and dashed, so a flipped edge shows as one purple and
    one gray. Nodes and edges are emitted in index order.
    """
    d = estimate.d
    labels = [f"X{i + 1}" for i in range(d)] if labels is None else list(labels)
    if len(labels) != d:
        raise ValueError(f"label count {len(labels)} does not match {d} nodes")
    lines = ["digraph estimate {"]
    for i, name in enumerate(labels):
        lines.append(f"  {_dot_id(name)};")
    edges = _estimate_edges(estimate)
    if truth is None:
        for p, c in edges:
            lines.append(f"  {_dot_id(labels[p])} -> {_dot_id(labels[c])};")
    else:
        if truth.d != d:
            raise ValueError(f"node sets differ: estimate has {d}, truth has {truth.d}")
        rep = evaluate(estimate, truth)
        cls = {e: "correct" for e in rep.correct}
        cls.update({e: "wrong" for e in rep.wrong})
        cls.update({e: "reversed" for e in rep.reversed})
        for p, c in edges:
            lines.append(f"  {_dot_id(labels[p])} -> {_dot_id(labels[c])} [{EDGE_STYLE[cls[(p, c)]]}];")
        for p, c in sorted(rep.missed):
            lines.append(f"  {_dot_id(labels[p])} -> {_dot_id(labels[c])} [{EDGE_STYLE['missed']}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
