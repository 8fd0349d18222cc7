"""Context-specific conditional independence for max-linear Bayesian networks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .conditional import (
    ConditionalSampler,
    ConditioningEvent,
    InfeasibleEventError,
    sample_conditional,
)
from .model import simulate_factors
from .tropical import cone_membership, trop_matvec

with warnings.catch_warnings():
    # numba (a dcor dependency) warns at import when the system TBB is old;
    # it falls back to another threading layer, so the warning is noise
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    import dcor

CONSTANT_DOMINANCE = 1e-6


@dataclass
class ConditionalRepresentation:
    """Block form of ``X_Kbar | X_K = x_K`` for ``X = Cstar ⊙ Z``.

    ``X_Kbar = A ∨ B ⊙ Z_Kbar`` with ``A = Cstar[Kbar, K] ⊙ x_K`` and
    ``B = Cstar[Kbar, Kbar]``, where ``Z`` is constrained by
    ``x_K = Cstar[K, K] ⊙ Z_K ∨ Cstar[K, Kbar] ⊙ Z_Kbar``.
    """

    K: tuple
    Kbar: tuple
    x: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C_KK: np.ndarray
    C_KKbar: np.ndarray

    def apply(self, Z):
        """``X_Kbar`` from full factor draws ``Z`` (shape ``(m, d)`` or ``(d,)``)."""
        Z = np.asarray(Z, dtype=float)
        ZK = Z[..., list(self.Kbar)]
        return np.maximum(self.A, trop_matvec(self.B, ZK)) if len(self.Kbar) else ZK

    def constraint(self, Z):
        """Right-hand side of the constraint, which must equal ``x``."""
        Z = np.asarray(Z, dtype=float)
        return np.maximum(trop_matvec(self.C_KK, Z[..., list(self.K)]) if len(self.K) else 0.0,
                          trop_matvec(self.C_KKbar, Z[..., list(self.Kbar)]) if len(self.Kbar) else 0.0)


def _event(K, x):
    if isinstance(K, ConditioningEvent):
        return K
    return ConditioningEvent(tuple(K), np.asarray(x, dtype=float))


def conditional_representation(net, K, x=None):
    """Extract the four Kleene-star blocks for the event ``X_K = x``."""
    K = tuple(K.K) if isinstance(K, ConditioningEvent) else tuple(int(k) for k in K)
    x = np.asarray([] if x is None else x, dtype=float).reshape(-1)
    if len(x) != len(K):
        raise ValueError("need one value per conditioned index")
    if any(not 0 <= k < net.d for k in K):
        raise ValueError("conditioned index out of range")
    S = np.asarray(net.Cstar)
    Kbar = tuple(i for i in range(net.d) if i not in K)
    ki, bi = list(K), list(Kbar)
    A = np.max(S[np.ix_(bi, ki)] * x, axis=1) if K else np.zeros(len(Kbar))
    return ConditionalRepresentation(
        K, Kbar, x, A,
        S[np.ix_(bi, bi)], S[np.ix_(ki, ki)], S[np.ix_(ki, bi)],
    )


@dataclass
class Feasibility:
    feasible: bool
    witness: np.ndarray
    violation: int = None


def event_feasible(net, K, x=None):
    """Whether some nonnegative ``Z`` gives ``(Cstar ⊙ Z)_K = x_K``.

    Uses the principal solution of the row block ``Cstar[K, :]``. Returns
    the greatest witness ``Z`` and, if infeasible, the first violated node.
    """
    ev = _event(K, x)
    rows = np.asarray(net.Cstar)[list(ev.K)]
    res = cone_membership(rows, ev.x)
    violation = ev.K[res.violated[0]] if res.violated else None
    return Feasibility(res.member, res.witness_z, violation)


@dataclass
class CiResult:
    statistic: float
    p_value: float
    samples_used: int
    degenerate: bool = False
    degenerate_flags: dict = field(default_factory=dict)
    note: str = ""


def _dependence(a, b):
    """Distance correlation; the O(n log n) route for univariate blocks."""
    if a.shape[1] == 1 and b.shape[1] == 1:
        return float(dcor.distance_correlation(a[:, 0], b[:, 0], method="mergesort"))
    return float(dcor.distance_correlation(a, b))


def _ranks(block):
    return np.column_stack([rankdata(block[:, c]) for c in range(block.shape[1])]).astype(float)


def _atom_probability(sampler, i):
    """Exact ``P(X_i = A_i | event)`` for a non-conditioned node ``i``."""
    rep_fixed = 0.0
    for k_pos, k in enumerate(sampler.event.K):
        rep_fixed = max(rep_fixed, sampler.C[i, k] * sampler.event.x[k_pos])
    total = 0.0
    b = sampler.bounds
    for prob, cell in zip(sampler.probs, sampler.cells):
        fixed = max((sampler.C[i, j] * z for j, z in cell.forced.items()), default=0.0)
        if fixed > rep_fixed * (1 + 1e-12):
            continue
        mass = 1.0
        for j, dist in enumerate(sampler.innovations):
            if j in cell.forced or sampler.C[i, j] == 0:
                continue
            cap = rep_fixed / sampler.C[i, j]
            if cap >= b[j]:
                continue
            num = float(dist.cdf(cap))
            den = float(dist.cdf(b[j])) if np.isfinite(b[j]) else 1.0
            mass *= num / den if den > 0 else 0.0
        total += prob * mass
    return total


def ci_test_mc(net, I, J, K=(), x=None, m=2000, perms=499, seed=0):
    """Monte-Carlo permutation test of ``X_I ⊥ X_J | X_K = x_K``.

    Draws ``m`` exact conditional samples (``Z`` conditioned through the
    Kleene star, so the constraint is a factor-model event), computes the
    distance correlation between the rank-transformed blocks and compares it
    with ``perms`` permutations of the ``J`` block. The p-value is
    ``(1 + #{perm stat >= observed}) / (perms + 1)``.

    Coordinates whose conditional law puts mass ``>= 1 - 1e-6`` on the
    fixed part ``A_i`` are flagged constant-dominant, and columns that are
    constant in the sample are flagged constant. If every coordinate of
    ``I`` or of ``J`` is flagged, the result reports independence by
    constancy without running permutations.
    """
    I = [int(i) for i in I]
    J = [int(j) for j in J]
    K = tuple(int(k) for k in K)
    if not I or not J:
        raise ValueError("I and J must be nonempty")
    if set(I) & set(J) or (set(I) | set(J)) & set(K):
        raise ValueError("I, J and K must be pairwise disjoint")
    if any(not 0 <= v < net.d for v in I + J + list(K)):
        raise ValueError("node index out of range")
    if m < 200:
        raise ValueError("m must be at least 200")
    if perms < 1:
        raise ValueError("perms must be positive")

    flags = {}
    if K:
        ev = ConditioningEvent(K, np.asarray(x, dtype=float))
        feas = event_feasible(net, ev)
        if not feas.feasible:
            raise InfeasibleEventError(feas.violation, f"event fails the residuation check at node index {feas.violation} (0-based)")
        sampler = ConditionalSampler(net.Cstar, ev, net.innovations)
        X = sample_conditional(sampler, m, seed).X
        for v in I + J:
            if _atom_probability(sampler, v) >= 1 - CONSTANT_DOMINANCE:
                flags[v] = "constant-dominant"
    else:
        X = simulate_factors(net, m, seed)[1]

    XI, XJ = X[:, I], X[:, J]
    for v in I + J:
        if np.ptp(X[:, v]) == 0:
            flags.setdefault(v, "constant")
    if all(v in flags for v in I) or all(v in flags for v in J):
        return CiResult(0.0, 1.0, m, True, flags, "degenerate: independent by constancy")

    RI, RJ = _ranks(XI), _ranks(XJ)
    observed = _dependence(RI, RJ)
    exceed = 0
    for k in range(perms):
        perm = np.random.default_rng([int(seed), 1, k]).permutation(m)
        if _dependence(RI, RJ[perm]) >= observed:
            exceed += 1
    return CiResult(observed, (1 + exceed) / (perms + 1), m, bool(flags), flags)
