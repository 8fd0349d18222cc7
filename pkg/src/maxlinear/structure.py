"""Latent tree recovery from extreme observations.

Two scorers feed the same arborescence search:

* ``correlation_scores``: the naive baseline, pairwise Pearson correlation.
* ``qtree_scores``: a QTree-style concentration score. For noise-free
  max-linear data ``log X_i - log X_j >= log Cstar_ij`` whenever ``j`` is an
  ancestor of ``i``, with an atom at the bound. Low variance among the
  smallest differences is therefore evidence for ``j ~> i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arborescence import Arborescence, edmonds_arborescence
from .dag import Dag


@dataclass
class ScoreMatrix:
    """Pairwise edge scores; ``scores[i, j]`` scores "``j`` is the parent of ``i``".

    Attributes
    ----------
    scores : (d, d) float array
        ``nan`` on the diagonal and wherever ``usable`` is false.
    usable : (d, d) bool array
    support : (d, d) int array
        Number of overlapping non-missing samples behind each entry.
    tiebreak : (d, d) float array or None
        Secondary score used only to order exact ties in ``scores``.
    coef : (d, d) float array or None
        Edge coefficient estimates ``c_hat[i, j]``.
    """

    scores: np.ndarray
    usable: np.ndarray
    support: np.ndarray
    method: str
    tiebreak: np.ndarray = None
    coef: np.ndarray = None
    params: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.scores.shape[0]


def _pair_overlap(obs):
    present = ~obs.mask
    return present.T.astype(int) @ present.astype(int)


def correlation_scores(obs, min_support=3, absolute=False):
    """Pairwise-complete Pearson correlation, symmetric.

    Pairs with fewer than ``min_support`` (at least 3) overlapping samples,
    or with a constant column over the overlap, are flagged unusable.
    ``absolute=True`` scores ``|corr|`` instead of the raw value.
    """
    min_support = max(int(min_support), 3)
    d = obs.d
    X = obs.values
    present = ~obs.mask
    support = _pair_overlap(obs)
    S = np.full((d, d), np.nan)
    for i in range(d):
        for j in range(i + 1, d):
            both = present[:, i] & present[:, j]
            if both.sum() < min_support:
                continue
            a = X[both, i] - X[both, i].mean()
            b = X[both, j] - X[both, j].mean()
            den = math.sqrt(float(a @ a) * float(b @ b))
            if den == 0:
                continue
            S[i, j] = S[j, i] = min(1.0, max(-1.0, float(a @ b) / den))
    if absolute:
        S = np.abs(S)
    usable = np.isfinite(S)
    return ScoreMatrix(S, usable, support, "correlation", params={"absolute": absolute})


def qtree_scores(obs, r=0.5, min_support=20, coef_quantile=0.0, atom_tol=1e-9):
    """QTree-style concentration scores.

    For each ordered pair ``(i, j)`` let ``D = log X_i - log X_j`` over rows
    where both are present (``m`` of them), and keep the ``ceil(r * m)``
    smallest values. The score is minus their variance, so higher means
    more concentrated near the lower bound. Variances below ``atom_tol**2``
    count as exactly zero, and such ties are broken by the atom mass, the
    fraction of ``D`` within ``atom_tol`` (relative) of its minimum.

    The coefficient estimate is ``exp(q-quantile of D)`` with
    ``q = coef_quantile``; ``0`` gives ``exp(min D)``, the noise-free choice.
    """
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    if not 0 <= coef_quantile < 1:
        raise ValueError("coef_quantile must lie in [0, 1)")
    L = obs.log() if not obs.log_domain else obs
    d = obs.d
    X = L.values
    present = ~L.mask
    support = _pair_overlap(L)
    S = np.full((d, d), np.nan)
    mass = np.zeros((d, d))
    coef = np.full((d, d), np.nan)
    for i in range(d):
        for j in range(d):
            if i == j or support[i, j] < max(min_support, 2):
                continue
            both = present[:, i] & present[:, j]
            D = np.sort(X[both, i] - X[both, j])
            m = D.size
            k = math.ceil(r * m)
            if k < 2:
                continue
            low = D[:k]
            var = float(np.var(low))
            S[i, j] = -var if var > atom_tol**2 else 0.0
            lo = D[0]
            mass[i, j] = np.count_nonzero(D - lo <= atom_tol * max(1.0, abs(lo))) / m
            coef[i, j] = math.exp(lo if coef_quantile == 0 else float(np.quantile(D, coef_quantile)))
    usable = np.isfinite(S)
    return ScoreMatrix(
        S, usable, support, "qtree", tiebreak=mass, coef=coef,
        params={"r": r, "min_support": min_support, "coef_quantile": coef_quantile},
    )


@dataclass
class LearnResult:
    tree: Arborescence
    scores: ScoreMatrix


def learn_tree(obs, method="qtree", r=0.5, min_support=20, root=None, coef_quantile=0.0,
               extreme_quantile=None, absolute=False):
    """Estimate a directed spanning tree from observations.

    Parameters
    ----------
    obs : ObservationSet
    method : {"qtree", "correlation"}
    r, min_support, coef_quantile
        Passed to :func:`qtree_scores` (``min_support`` also to the baseline).
    root : int, optional
        Fix the root instead of searching over all of them.
    extreme_quantile : float, optional
        Keep only rows whose row maximum exceeds this quantile of row maxima
        before scoring.
    absolute : bool
        Correlation baseline only: score ``|corr|``.

    Notes
    -----
    A symmetric correlation score gives every root the same optimal total,
    so the baseline breaks that tie with an upstream heuristic: among roots
    attaining the best total, prefer the node with the smallest median
    observed value (flows accumulate downstream).
    """
    if obs.n == 0:
        raise ValueError("no observations")
    if extreme_quantile is not None:
        obs = obs.extreme_rows(extreme_quantile)
        if obs.n == 0:
            raise ValueError("no rows left after extreme filtering")
    if method == "qtree":
        S = qtree_scores(obs, r=r, min_support=min_support, coef_quantile=coef_quantile)
    elif method in ("correlation", "corr"):
        S = correlation_scores(obs, min_support=min_support, absolute=absolute)
    else:
        raise ValueError(f"unknown method {method!r}")
    tree = edmonds_arborescence(S.scores, S.usable, "maximize", root=root, secondary=S.tiebreak)
    if root is None and method in ("correlation", "corr"):
        tree = _prefer_upstream_root(obs, S, tree)
    if S.coef is not None:
        tree.coef = {(p, c): float(S.coef[c, p]) for p, c in tree.edges()}
    return LearnResult(tree, S)


def _prefer_upstream_root(obs, S, best):
    with np.errstate(all="ignore"):
        med = np.nanmedian(np.where(obs.mask, np.nan, obs.values), axis=0)
    med = np.where(np.isfinite(med), med, np.inf)
    for cand in np.argsort(med, kind="stable"):
        cand = int(cand)
        if cand == best.root:
            return best
        try:
            alt = edmonds_arborescence(S.scores, S.usable, "maximize", root=cand, secondary=S.tiebreak)
        except ValueError:
            continue
        if alt.weight == best.weight or np.isclose(alt.weight, best.weight, rtol=1e-12, atol=0.0):
            return alt
    return best


@dataclass
class EdgeReport:
    """Edge-level comparison of an estimated tree with the truth."""

    correct: list
    wrong: list
    reversed: list
    missed: list
    precision: float
    recall: float

    @property
    def counts(self):
        return {"correct": len(self.correct), "wrong": len(self.wrong), "reversed": len(self.reversed)}


def evaluate(estimate, truth):
    """Classify each estimated edge ``p -> c`` against the true DAG.

    Correct if the truth contains ``p -> c``, reversed if it contains
    ``c -> p``, wrong otherwise. ``missed`` lists true edges the
    estimate does not contain as given (a reversed estimate still misses it).
    """
    if isinstance(estimate, Arborescence):
        est_edges = estimate.edges()
        d = estimate.d
    else:
        est_edges = sorted((p, c) for c, p in estimate.edges)
        d = estimate.d
    if d != truth.d:
        raise ValueError(f"node sets differ: estimate has {d}, truth has {truth.d}")
    true_edges = {(p, c) for c, p in truth.edges}
    correct, wrong, rev = [], [], []
    for p, c in est_edges:
        if (p, c) in true_edges:
            correct.append((p, c))
        elif (c, p) in true_edges:
            rev.append((p, c))
        else:
            wrong.append((p, c))
    est_set = set(est_edges)
    missed = sorted(e for e in true_edges if e not in est_set)
    precision = len(correct) / (d - 1) if d > 1 else 1.0
    recall = len(correct) / len(true_edges) if true_edges else 1.0
    return EdgeReport(correct, wrong, rev, missed, precision, recall)


def truth_dag(model):
    """The true DAG of a network model, for :func:`evaluate`."""
    return model.dag if hasattr(model, "dag") else Dag.from_matrix(model.C)
