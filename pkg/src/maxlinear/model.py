"""Max-linear factor models and Bayesian networks: simulation, CDF, tail dependence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import innovations as inn
from .dag import Dag
from .tropical import as_tropical, kleene_star, trop_matvec

# rows per RNG stream; keeps simulate output independent of how work is split
BLOCK_ROWS = 4096
_U_EPS = 2.0**-60


def _block_rng(seed, block):
    return np.random.default_rng([int(seed), int(block)])


def open_uniform(rng, size):
    """Uniforms strictly inside ``(0, 1)``."""
    return np.clip(rng.random(size), _U_EPS, 1.0 - 2.0**-53)


def _check_innovations(dists, p):
    if dists is None:
        return (inn.UNIT_FRECHET,) * p
    dists = tuple(dists)
    if len(dists) != p:
        raise ValueError(f"need {p} innovation specs, got {len(dists)}")
    return dists


@dataclass(frozen=True, eq=False)
class FactorModel:
    """``X = C ⊙ Z`` with ``C`` of shape ``(d, p)`` and independent ``Z_j``."""

    C: np.ndarray
    innovations: tuple = None

    def __post_init__(self):
        C = as_tropical(self.C)
        if np.any(C.max(axis=1) == 0):
            raise ValueError("every row of C needs a positive entry")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "innovations", _check_innovations(self.innovations, C.shape[1]))

    @property
    def d(self):
        return self.C.shape[0]

    @property
    def p(self):
        return self.C.shape[1]

    @property
    def factor_matrix(self):
        return self.C


@dataclass(frozen=True, eq=False)
class MaxLinearNetwork:
    """Recursive max-linear model ``X = C ⊙ X ∨ Z`` on a DAG.

    ``C[i, j] > 0`` exactly when ``j -> i``. The Kleene star ``Cstar`` is
    computed once; ``X = Cstar ⊙ Z``.
    """

    C: np.ndarray
    innovations: tuple = None
    dag: Dag = field(init=False)
    Cstar: np.ndarray = field(init=False)

    def __post_init__(self):
        C = as_tropical(self.C)
        if C.shape[0] != C.shape[1]:
            raise ValueError("network coefficient matrix must be square")
        dag = Dag.from_matrix(C > 0)
        Cstar = kleene_star(C)
        C.setflags(write=False)
        Cstar.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "dag", dag)
        object.__setattr__(self, "Cstar", Cstar)
        object.__setattr__(self, "innovations", _check_innovations(self.innovations, C.shape[0]))

    @classmethod
    def from_edges(cls, d, edges, innovations=None):
        """``edges`` is an iterable of ``(parent, child, coeff)`` (0-indexed)."""
        C = np.zeros((d, d))
        for parent, child, coeff in edges:
            if coeff <= 0:
                raise ValueError("edge coefficients must be positive")
            C[child, parent] = coeff
        return cls(C, innovations)

    @property
    def d(self):
        return self.C.shape[0]

    @property
    def p(self):
        return self.d

    @property
    def factor_matrix(self):
        return self.Cstar

    def edges(self):
        """Sorted ``(parent, child, coeff)`` triples."""
        return [(j, i, float(self.C[i, j])) for i, j in sorted(self.dag.edges, key=lambda e: (e[1], e[0]))]


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement noise and missingness.

    Parameters
    ----------
    sigma : float
        Multiplicative log-normal noise, ``X <- X * exp(sigma * N(0, 1))``.
    mcar_rate : float or sequence
        Per-node probability that an entry goes missing completely at random.
    extreme_missing_prob : float
        Probability of losing an entry that lies above the node's
        ``extreme_quantile`` (a sensor failing during a flood).
    extreme_quantile : float
        Empirical per-node quantile defining "above threshold".
    """

    sigma: float = 0.0
    mcar_rate: object = 0.0
    extreme_missing_prob: float = 0.0
    extreme_quantile: float = 0.9

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        rates = np.atleast_1d(np.asarray(self.mcar_rate, dtype=float))
        if np.any(rates < 0) or np.any(rates >= 1):
            raise ValueError("mcar_rate must lie in [0, 1)")
        if not 0 <= self.extreme_missing_prob < 1:
            raise ValueError("extreme_missing_prob must lie in [0, 1)")
        if not 0 < self.extreme_quantile < 1:
            raise ValueError("extreme_quantile must lie in (0, 1)")


NO_NOISE = NoiseSpec()


@dataclass(eq=False)
class ObservationSet:
    """An ``n x d`` sample with a missing-value mask.

    Missing entries hold ``nan`` in ``values`` and ``True`` in ``mask``.
    ``regime`` optionally labels each row (1 = extreme event, 0 = base flow).
    """

    values: np.ndarray
    mask: np.ndarray = None
    labels: list = None
    log_domain: bool = False
    regime: np.ndarray = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array")
        mask = np.isnan(values) if self.mask is None else np.asarray(self.mask, dtype=bool) | np.isnan(values)
        if mask.shape != values.shape:
            raise ValueError("mask shape differs from values")
        values[mask] = np.nan
        self.values = values
        self.mask = mask
        if self.labels is None:
            self.labels = [f"X{i + 1}" for i in range(values.shape[1])]
        self.labels = [str(s) for s in self.labels]
        if len(self.labels) != values.shape[1] or len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique, one per column")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]

    def log(self):
        """Log-transformed copy; fails on nonpositive present values."""
        if self.log_domain:
            return self
        bad = np.argwhere(~self.mask & ~(self.values > 0))
        if len(bad):
            r, c = bad[0]
            raise ValueError(
                f"nonpositive value {self.values[r, c]} at row {r + 1}, column {self.labels[c]!r}; "
                "log transform needs strictly positive observations"
            )
        with np.errstate(invalid="ignore"):
            return ObservationSet(np.log(self.values), self.mask, self.labels, True, self.regime)

    def rows(self, idx):
        regime = None if self.regime is None else self.regime[idx]
        return ObservationSet(self.values[idx], self.mask[idx], self.labels, self.log_domain, regime)

    def extreme_rows(self, quantile):
        """Keep rows whose row maximum exceeds the ``quantile`` of row maxima."""
        vals = np.where(self.mask, -np.inf, self.values)
        rmax = vals.max(axis=1)
        ok = np.isfinite(rmax)
        thr = np.quantile(rmax[ok], quantile)
        return self.rows(np.flatnonzero(ok & (rmax > thr)))


def _draw_block(model, rows, seed, block):
    rng = _block_rng(seed, block)
    p = model.factor_matrix.shape[1]
    d = model.d
    U = open_uniform(rng, (rows, p))
    N = rng.standard_normal((rows, d))
    Um = rng.random((rows, d))
    Ue = rng.random((rows, d))
    Z = inn.sample(model.innovations, U)
    return Z, N, Um, Ue


def _apply_noise(X, N, Um, Ue, noise):
    if noise.sigma > 0:
        X = X * np.exp(noise.sigma * N)
    mask = Um < np.broadcast_to(np.asarray(noise.mcar_rate, dtype=float), (X.shape[1],))
    if noise.extreme_missing_prob > 0 and len(X):
        thr = np.quantile(X, noise.extreme_quantile, axis=0)
        mask |= (X > thr) & (Ue < noise.extreme_missing_prob)
    return X, mask


def simulate_factors(model, n, seed):
    """Raw draws ``(Z, X)`` without noise; ``X = A ⊙ Z`` with ``A`` the factor matrix."""
    Zs, Xs = [], []
    A = model.factor_matrix
    for b, start in enumerate(range(0, n, BLOCK_ROWS)):
        Z = _draw_block(model, min(BLOCK_ROWS, n - start), seed, b)[0]
        Zs.append(Z)
        Xs.append(trop_matvec(A, Z))
    return np.vstack(Zs), np.vstack(Xs)


def simulate(model, n, noise=NO_NOISE, seed=0, labels=None):
    """Draw ``n`` i.i.d. rows from a max-linear model.

    Each row is ``Cstar ⊙ Z`` (network) or ``C ⊙ Z`` (factor model); noise
    and then missingness are applied afterwards. Rows are generated in
    fixed-size blocks, each with its own RNG stream derived from
    ``(seed, block index)``, so the output is bit-reproducible.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    noise = NO_NOISE if noise is None else noise
    A = model.factor_matrix
    parts = []
    for b, start in enumerate(range(0, n, BLOCK_ROWS)):
        Z, N, Um, Ue = _draw_block(model, min(BLOCK_ROWS, n - start), seed, b)
        parts.append((trop_matvec(A, Z), N, Um, Ue))
    X, N, Um, Ue = (np.vstack(t) for t in zip(*parts))
    X, mask = _apply_noise(X, N, Um, Ue, noise)
    return ObservationSet(X, mask, labels)


def _require_frechet(model):
    for dist in model.innovations:
        if not isinstance(dist, inn.Frechet):
            raise inn.UnsupportedDistribution("cdf has a closed form only for Fréchet innovations")


def cdf(model, x):
    """Exact joint CDF ``P(X <= x)`` for Fréchet innovations.

    ``P(X <= x) = prod_j P(Z_j <= min_i x_i / A_ij)`` where ``A`` is the
    factor matrix. For unit Fréchet this is
    ``exp(-sum_j max_i A_ij / x_i)``.
    """
    _require_frechet(model)
    x = np.asarray(x, dtype=float)
    A = model.factor_matrix
    if x.shape != (A.shape[0],):
        raise ValueError(f"x must have length {A.shape[0]}")
    if np.any(x <= 0):
        raise ValueError("cdf is defined here for x > 0 only")
    # max_i A_ij / x_i is the reciprocal of the binding bound on Z_j
    inv_bound = np.max(A / x[:, None], axis=0)
    total = 0.0
    for j, dist in enumerate(model.innovations):
        if inv_bound[j] > 0:
            total += (dist.scale * inv_bound[j]) ** dist.shape
    return float(np.exp(-total))


def tail_dependence(C, y):
    """Stable tail dependence function ``l(y) = sum_j max_i C_ij y_i``.

    Columns of ``C`` index factors, rows index coordinates of ``y``.
    """
    C = as_tropical(C)
    y = np.asarray(y, dtype=float)
    if y.shape != (C.shape[0],):
        raise ValueError(f"y must have length {C.shape[0]}")
    return float(np.sum(np.max(C * y[:, None], axis=0)))


def tail_dependence_approx(C, y):
    """Large-``|y|`` approximation ``max_j max_i C_ij y_i``; bounds ``l`` from below."""
    C = as_tropical(C)
    y = np.asarray(y, dtype=float)
    if y.shape != (C.shape[0],):
        raise ValueError(f"y must have length {C.shape[0]}")
    return float(np.max(C * y[:, None]))


def _random_tree_edges(d, rng):
    """Uniform labeled rooted tree, as ``(parent, child)`` pairs oriented away from the root."""
    if d == 2:
        undirected = [(0, 1)]
    else:
        prufer = rng.integers(0, d, size=d - 2)
        degree = np.ones(d, dtype=int)
        for v in prufer:
            degree[v] += 1
        undirected = []
        for v in prufer:
            leaf = int(np.flatnonzero(degree == 1)[0])
            undirected.append((leaf, int(v)))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = np.flatnonzero(degree == 1)
        undirected.append((int(u), int(w)))
    root = int(rng.integers(d))
    nbrs = {v: [] for v in range(d)}
    for a, b in undirected:
        nbrs[a].append(b)
        nbrs[b].append(a)
    edges, stack, seen = [], [root], {root}
    while stack:
        v = stack.pop()
        for w in sorted(nbrs[v]):
            if w not in seen:
                seen.add(w)
                edges.append((v, w))
                stack.append(w)
    return edges


def random_network(d, shape="tree", coeff_range=(0.5, 2.0), seed=0, density=0.3, innovations=None):
    """Random benchmark network.

    ``shape="tree"`` draws a uniformly random labeled rooted tree oriented
    away from its root; ``shape="dag"`` orders nodes randomly and adds each
    forward edge independently with probability ``density``. Coefficients
    are log-uniform on ``coeff_range``.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    lo, hi = coeff_range
    if not 0 < lo <= hi:
        raise ValueError("coeff_range needs 0 < lo <= hi")
    rng = np.random.default_rng(seed)
    if shape == "tree":
        pairs = _random_tree_edges(d, rng)
    elif shape == "dag":
        if not 0 < density <= 1:
            raise ValueError("density must lie in (0, 1]")
        order = rng.permutation(d)
        pairs = [
            (int(order[a]), int(order[b]))
            for a in range(d)
            for b in range(a + 1, d)
            if rng.random() < density
        ]
    else:
        raise ValueError(f"unknown shape {shape!r}")
    coeffs = np.exp(rng.uniform(np.log(lo), np.log(hi), size=len(pairs)))
    edges = [(p, c, float(w)) for (p, c), w in zip(pairs, coeffs)]
    return MaxLinearNetwork.from_edges(d, edges, innovations)


def drought_scenario(model, n, base_level=0.0, extreme_rate=0.1, seed=0, base_scale=0.1,
                     noise=NO_NOISE, labels=None):
    """Mixture of decorrelated base flow and max-linear extreme events.

    With probability ``1 - extreme_rate`` a row is i.i.d. base noise
    ``base_level + base_scale * Exp(1)`` at every node, with no propagation
    along the network. Otherwise the row is an extreme event
    ``Cstar ⊙ Z``. ``noise`` is applied to every row afterwards and
    ``regime`` records the row type (1 = extreme).
    """
    if base_level < 0 or base_scale <= 0:
        raise ValueError("base_level must be >= 0 and base_scale > 0")
    if not 0 <= extreme_rate <= 1:
        raise ValueError("extreme_rate must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    noise = NO_NOISE if noise is None else noise
    A = model.factor_matrix
    parts = []
    for b, start in enumerate(range(0, n, BLOCK_ROWS)):
        rows = min(BLOCK_ROWS, n - start)
        Z, N, Um, Ue = _draw_block(model, rows, seed, b)
        rng = _block_rng(seed, b).spawn(1)[0]
        is_ext = rng.random(rows) < extreme_rate
        base = base_level + base_scale * rng.standard_exponential((rows, model.d))
        X = np.where(is_ext[:, None], trop_matvec(A, Z), base)
        parts.append((X, N, Um, Ue, is_ext.astype(int)))
    X, N, Um, Ue, regime = (np.concatenate(t) for t in zip(*parts))
    X, mask = _apply_noise(X, N, Um, Ue, noise)
    return ObservationSet(X, mask, labels, regime=regime)
