"""Exact conditional sampling for max-linear factor models.

Given ``X = C ⊙ Z`` with independent continuous factors and an event
``X_K = x_K``, every factor is capped by ``b_j = min_k x_k / C_kj`` and each
conditioned coordinate must be attained ("hit") by some factor sitting
exactly at its cap. The conditional law is a mixture over hitting
scenarios; within a scenario the hitting factors are fixed and the others
are independent draws truncated to ``(0, b_j]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .innovations import UnsupportedDistribution
from .model import BLOCK_ROWS, _block_rng, open_uniform
from .tropical import DEFAULT_RTOL, as_tropical, rel_close, trop_matvec

MAX_CANDIDATES = 10**6


class InfeasibleEventError(ValueError):
    """The conditioning event has probability-zero support under the model."""

    def __init__(self, coordinate, message=None):
        self.coordinate = coordinate
        super().__init__(message or f"event infeasible at coordinate {coordinate}")


@dataclass(frozen=True)
class ConditioningEvent:
    """``X_K = x_K`` with ``K`` a tuple of distinct 0-based indices."""

    K: tuple
    x: np.ndarray

    def __post_init__(self):
        K = tuple(int(k) for k in self.K)
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if len(set(K)) != len(K):
            raise ValueError("conditioned indices must be distinct")
        if x.shape != (len(K),):
            raise ValueError("need one value per conditioned index")
        if np.any(~(x > 0)):
            raise ValueError("conditioned values must be positive")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "x", x)

    @classmethod
    def parse(cls, text, one_based=True):
        """Parse ``"3=4.0,5=2.5"``."""
        K, x = [], []
        for part in filter(None, (s.strip() for s in text.split(","))):
            k, v = part.split("=")
            K.append(int(k) - (1 if one_based else 0))
            x.append(float(v))
        return cls(tuple(K), np.array(x))

    def complement(self, d):
        return tuple(i for i in range(d) if i not in self.K)


@dataclass(frozen=True)
class HittingScenario:
    """One feasible hit map.

    ``hit[r]`` is the factor attaining ``x_K[r]``; ``forced`` maps each
    hitting factor to its value; ``bounds`` holds ``b_j`` for every factor
    (``inf`` when no conditioned row loads on it). ``log_weight`` is
    ``sum_forced log(z f(z)) + sum_free log F(b)``, i.e. the scenario density
    with respect to ``log x_K``.
    """

    hit: tuple
    forced: dict
    bounds: np.ndarray
    log_weight: float

    @property
    def forced_set(self):
        return frozenset(self.forced)

    @property
    def weight(self):
        return math.exp(self.log_weight)

    def hitting_matrix(self, p):
        H = np.zeros((len(self.hit), p), dtype=int)
        H[np.arange(len(self.hit)), list(self.hit)] = 1
        return H


def factor_bounds(C, event):
    """Caps ``b_j = min_{k in K} x_k / C_kj`` (``inf`` if column ``j`` is zero on ``K``)."""
    CK = as_tropical(C)[list(event.K)]
    with np.errstate(divide="ignore"):
        ratio = np.where(CK > 0, event.x[:, None] / np.where(CK > 0, CK, 1.0), np.inf)
    return ratio.min(axis=0) if len(event.K) else np.full(CK.shape[1], np.inf)


def _require_continuous(innovations):
    for dist in innovations:
        if not getattr(dist, "continuous", False):
            raise UnsupportedDistribution("conditional sampling needs continuous innovations with densities")


def _log_weight(forced, bounds, innovations):
    lw = 0.0
    for j, dist in enumerate(innovations):
        if j in forced:
            z = forced[j]
            lw += math.log(z) + float(dist.logpdf(z))
        elif np.isfinite(bounds[j]):
            lw += float(dist.logcdf(bounds[j]))
    return lw


def enumerate_scenarios(C, event, innovations, rel_tol=DEFAULT_RTOL):
    """All feasible hit maps for ``event``, with forced values and weights.

    A factor ``j`` can hit row ``k`` only if ``x_k / C_kj`` equals its cap
    ``b_j`` (any other value would push some conditioned coordinate above
    its observed level). Hit maps are the product of these per-row
    candidate sets; a factor hitting several rows is consistent because its
    forced value is ``b_j`` in each.

    Raises
    ------
    InfeasibleEventError
        If some conditioned coordinate cannot be hit by any factor.
    """
    C = as_tropical(C)
    innovations = tuple(innovations)
    _require_continuous(innovations)
    d, p = C.shape
    if len(innovations) != p:
        raise ValueError(f"need {p} innovation specs")
    if any(not 0 <= k < d for k in event.K):
        raise ValueError("conditioned index out of range")
    if p ** len(event.K) > MAX_CANDIDATES:
        raise ValueError(f"{p}^{len(event.K)} hit-map candidates exceed the enumeration limit {MAX_CANDIDATES}")
    b = factor_bounds(C, event)
    candidates = []
    for r, k in enumerate(event.K):
        row = C[k]
        cand = [
            j for j in range(p)
            if row[j] > 0 and rel_close(event.x[r] / row[j], b[j], rel_tol)
        ]
        if not cand:
            raise InfeasibleEventError(
                k, f"node index {k} (0-based; x={event.x[r]:g}) cannot be attained: "
                   "every loading factor is capped lower by another conditioned coordinate"
            )
        candidates.append(cand)
    scenarios = []
    for hit in itertools.product(*candidates):
        forced = {j: float(b[j]) for j in sorted(set(hit))}
        scenarios.append(HittingScenario(hit, forced, b, _log_weight(forced, b, innovations)))
    return scenarios


@dataclass
class SupportCell:
    """Max-affine description of ``X_Kbar`` inside one scenario.

    ``X_i = max(fixed_i, max_{free j} C_ij Z_j)`` with ``0 < Z_j <= b_j``.
    """

    scenario: int
    Kbar: tuple
    fixed: np.ndarray
    free: dict
    coeffs: np.ndarray

    @property
    def upper(self):
        """Largest attainable value of each coordinate of ``X_Kbar``."""
        up = self.fixed.copy()
        for j, bj in self.free.items():
            col = self.coeffs[:, j]
            up = np.maximum(up, np.where(col > 0, col * bj, 0.0))
        return up

    def evaluate(self, z):
        """``X_Kbar`` for a factor vector ``z`` drawn in this cell."""
        z = np.asarray(z, dtype=float)
        out = self.fixed.copy()
        for j in self.free:
            out = np.maximum(out, self.coeffs[:, j] * z[j])
        return out

    def contains(self, x_kbar, z, rel_tol=DEFAULT_RTOL):
        """True if ``z`` respects the caps and reproduces ``x_kbar``."""
        z = np.asarray(z, dtype=float)
        for j, bj in self.free.items():
            if z[j] > bj:
                return False
        return bool(np.all(rel_close(self.evaluate(z), x_kbar, rel_tol)))


@dataclass
class ConditionalSampler:
    """Exact sampler for ``X | X_K = x_K`` under ``X = C ⊙ Z``.

    Hit maps that force the same set of factors describe the same event in
    factor space, so they are merged. Only forced sets of minimal size
    carry conditional probability: larger ones are lower-dimensional
    slices of the event and have relative weight zero.
    """

    C: np.ndarray
    event: ConditioningEvent
    innovations: tuple
    rel_tol: float = DEFAULT_RTOL
    scenarios: list = field(init=False)
    cells: list = field(init=False)
    log_weights: np.ndarray = field(init=False)
    probs: np.ndarray = field(init=False)
    log_partition: float = field(init=False)

    def __post_init__(self):
        self.C = as_tropical(self.C)
        self.innovations = tuple(self.innovations)
        self.scenarios = enumerate_scenarios(self.C, self.event, self.innovations, self.rel_tol)
        self.bounds = self.scenarios[0].bounds
        groups = {}
        for s in self.scenarios:
            groups.setdefault(s.forced_set, s)
        rank = min(len(fs) for fs in groups)
        self.cells = [s for fs, s in sorted(groups.items(), key=lambda kv: sorted(kv[0])) if len(fs) == rank]
        lw = np.array([s.log_weight for s in self.cells])
        if not np.all(np.isfinite(lw)):
            lw = np.where(np.isfinite(lw), lw, -np.inf)
        self.log_partition = float(logsumexp(lw))
        if not np.isfinite(self.log_partition):
            raise InfeasibleEventError(self.event.K[0], "all scenario weights vanish; event has zero density")
        self.log_weights = lw
        self.probs = np.exp(lw - self.log_partition)

    @property
    def d(self):
        return self.C.shape[0]

    @property
    def p(self):
        return self.C.shape[1]

    @property
    def Kbar(self):
        return self.event.complement(self.d)

    def support_cells(self):
        return support_cells(self)


def support_cells(sampler):
    """Per-scenario cell of the conditional support of ``X_Kbar``."""
    Kbar = list(sampler.Kbar)
    A = sampler.C[Kbar]
    out = []
    for sid, s in enumerate(sampler.cells):
        fixed = np.zeros(len(Kbar))
        for j, z in s.forced.items():
            fixed = np.maximum(fixed, A[:, j] * z)
        free = {j: float(sampler.bounds[j]) for j in range(sampler.p) if j not in s.forced}
        out.append(SupportCell(sid, tuple(Kbar), fixed, free, A))
    return out


@dataclass
class ConditionalDraws:
    X: np.ndarray
    Z: np.ndarray
    scenario: np.ndarray
    Kbar: tuple

    @property
    def X_Kbar(self):
        return self.X[:, list(self.Kbar)]


def sample_conditional(sampler, m, seed=0):
    """Draw ``m`` samples of ``(X, Z)`` given the sampler's event.

    Per draw: pick a scenario with its normalized weight, fix the forced
    factors at their caps and draw each free factor from its law truncated
    to ``(0, b_j]`` by inverse CDF. Draws come in fixed-size blocks with RNG
    streams keyed by ``(seed, block)``.

    Coordinates that equal ``x_K``, or the fixed part
    ``A_i = max_k C_ik x_k``, up to ``rel_tol`` are snapped to those exact
    values so atoms of the conditional law are bit-identical across
    scenarios. ``Z`` is returned unmodified.
    """
    p = sampler.p
    cum = np.cumsum(sampler.probs)
    cum[-1] = 1.0
    b = sampler.bounds
    logF = np.array([
        float(dist.logcdf(b[j])) if np.isfinite(b[j]) else 0.0
        for j, dist in enumerate(sampler.innovations)
    ])
    forced = np.zeros((len(sampler.cells), p), dtype=bool)
    for s, cell in enumerate(sampler.cells):
        forced[s, list(cell.forced)] = True
    Zs, ids = [], []
    for blk, start in enumerate(range(0, m, BLOCK_ROWS)):
        rows = min(BLOCK_ROWS, m - start)
        rng = _block_rng(seed, blk)
        sid = np.searchsorted(cum, rng.random(rows), side="right")
        sid = np.minimum(sid, len(cum) - 1)
        logu = np.log(open_uniform(rng, (rows, p))) + logF
        Z = np.empty((rows, p))
        for j, dist in enumerate(sampler.innovations):
            Z[:, j] = np.minimum(dist.ppf_log(logu[:, j]), b[j])
        Z = np.where(forced[sid], b, Z)
        Zs.append(Z)
        ids.append(sid)
    Z = np.vstack(Zs) if Zs else np.empty((0, p))
    X = trop_matvec(sampler.C, Z) if m else np.empty((0, sampler.d))
    if m:
        K, Kbar = list(sampler.event.K), list(sampler.Kbar)
        X[:, K] = np.where(rel_close(X[:, K], sampler.event.x, sampler.rel_tol), sampler.event.x, X[:, K])
        # the atom A_i = max_k C_ik x_k is reached through different products
        # in different scenarios; snap so equal values compare equal
        A = np.max(sampler.C[np.ix_(Kbar, K)] * sampler.event.x, axis=1)
        XK = X[:, Kbar]
        X[:, Kbar] = np.where((A > 0) & rel_close(XK, A, sampler.rel_tol), A, XK)
    return ConditionalDraws(X, Z, np.concatenate(ids) if ids else np.empty(0, int), sampler.Kbar)


def constraint_residual(C, Z, event):
    """Largest relative violation of ``(C ⊙ Z)_K = x_K`` over the rows of ``Z``."""
    XK = trop_matvec(np.asarray(C)[list(event.K)], Z)
    return float(np.max(np.abs(XK - event.x) / np.maximum(event.x, 1.0))) if len(Z) else 0.0


@dataclass
class RejectionResult:
    X_Kbar: np.ndarray
    accepted: int
    draws: int

    @property
    def acceptance_rate(self):
        return self.accepted / self.draws if self.draws else 0.0


def rejection_oracle(C, event, innovations, epsilon, m_target, seed=0, max_draws=10**7, project=None):
    """Approximate conditioning by accepting ``|X_K - x_K| <= epsilon * x_K``.

    Meant as an independent check of :func:`sample_conditional`. Returns
    at most ``m_target`` accepted rows (fewer if ``max_draws`` runs out).

    With ``project`` (the default for a single conditioned node) each
    accepted row is rescaled by ``x_k / X_k``. Since ``C ⊙ (λZ) = λ (C ⊙ Z)``
    this maps the draw onto the slice ``X_k = x_k`` exactly, so atoms of
    the conditional law (e.g. ``X_i = C_ik x_k``) land where they belong
    instead of being smeared over the acceptance window. Without
    projection the window blurs such atoms by a relative ``epsilon`` no
    matter how small it is.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    C = as_tropical(C)
    innovations = tuple(innovations)
    K = list(event.K)
    Kbar = list(event.complement(C.shape[0]))
    if project is None:
        project = len(K) == 1
    if project and len(K) != 1:
        raise ValueError("projection onto the slice needs exactly one conditioned node")
    batch = 65536
    kept, draws, blk = [], 0, 0
    accepted = 0
    while accepted < m_target and draws < max_draws:
        rows = min(batch, max_draws - draws)
        rng = _block_rng(seed, blk)
        U = open_uniform(rng, (rows, C.shape[1]))
        Z = np.empty_like(U)
        for j, dist in enumerate(innovations):
            Z[:, j] = dist.ppf(U[:, j])
        X = trop_matvec(C, Z)
        ok = np.all(np.abs(X[:, K] - event.x) <= epsilon * event.x, axis=1)
        Xa = X[ok]
        if project:
            Xa = Xa * (event.x[0] / Xa[:, K[0]])[:, None]
        kept.append(Xa[:, Kbar])
        accepted += int(ok.sum())
        draws += rows
        blk += 1
    if accepted == 0:
        raise RuntimeError(
            f"no acceptances in {draws} draws (acceptance rate < {1.0 / draws:.2e}); "
            "widen epsilon or raise max_draws"
        )
    X_Kbar = np.vstack(kept)[:m_target]
    return RejectionResult(X_Kbar, accepted, draws)
