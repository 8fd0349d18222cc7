"""Tropical linear algebra over the max-times and max-plus semirings.

Max-times matrices are plain nonnegative float arrays: ``0`` is the additive
identity ("no edge") and ``1`` the multiplicative one. The max-plus view is
the entrywise logarithm, with ``0`` mapped to ``NEG_INF``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dag import Dag

NEG_INF = -np.inf
DEFAULT_RTOL = 1e-9


def as_tropical(C, name="C"):
    """Validate and return a nonnegative 2-d float array."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {C.shape}")
    if not np.all(np.isfinite(C)) or np.any(C < 0):
        raise ValueError(f"{name} must have finite nonnegative entries")
    return C


def to_log(C):
    """Max-plus view of a max-times array (``0 -> NEG_INF``)."""
    C = np.asarray(C, dtype=float)
    out = np.full(C.shape, NEG_INF)
    pos = C > 0
    out[pos] = np.log(C[pos])
    return out


def from_log(L):
    """Inverse of :func:`to_log`."""
    L = np.asarray(L, dtype=float)
    out = np.zeros(L.shape)
    fin = L != NEG_INF
    out[fin] = np.exp(L[fin])
    return out


def rel_close(a, b, rel_tol=DEFAULT_RTOL):
    """Elementwise ``|a - b| <= rel_tol * max(a, b, 1)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return np.abs(a - b) <= rel_tol * scale


def trop_matvec(C, z):
    """Max-times product ``(C ⊙ z)_i = max_j C_ij z_j``.

    ``z`` may also be a batch of shape ``(n, p)``, in which case the
    result has shape ``(n, d)``.
    """
    C = np.asarray(C, dtype=float)
    z = np.asarray(z, dtype=float)
    if C.ndim != 2 or z.shape[-1] != C.shape[1]:
        raise ValueError(f"shape mismatch: C {C.shape} vs z {z.shape}")
    if np.any(z < 0):
        raise ValueError("z must be nonnegative")
    if z.ndim == 1:
        return np.max(C * z, axis=1)
    return np.max(C[None, :, :] * z[:, None, :], axis=2)


def trop_matmul(A, B):
    """Max-times matrix product ``(A ⊙ B)_ik = max_j A_ij B_jk``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError(f"shape mismatch: {A.shape} ⊙ {B.shape}")
    return np.max(A[:, :, None] * B[None, :, :], axis=1)


def maxplus_matvec(L, u):
    """Max-plus product ``max_j (L_ij + u_j)``."""
    L = np.asarray(L, dtype=float)
    u = np.asarray(u, dtype=float)
    if L.ndim != 2 or u.shape[-1] != L.shape[1]:
        raise ValueError(f"shape mismatch: L {L.shape} vs u {u.shape}")
    if u.ndim == 1:
        return np.max(L + u, axis=1)
    return np.max(L[None, :, :] + u[:, None, :], axis=2)


def maxplus_matmul(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError(f"shape mismatch: {A.shape} ⊙ {B.shape}")
    return np.max(A[:, :, None] + B[None, :, :], axis=1)


def trop_identity(d):
    return np.eye(d)


def kleene_star(C, log=False):
    """Kleene star ``C* = I ⊕ C ⊕ C^2 ⊕ ...`` of a DAG-supported matrix.

    Evaluated by dynamic programming over a topological order, so each row
    is the best path weight from every ancestor. With ``log=True`` the input
    is a max-plus matrix (``NEG_INF`` for absent edges) and the result is the
    max-plus star, which avoids overflow on long coefficient chains.

    Raises
    ------
    CycleError
        If the support of ``C`` is cyclic; the series need not converge.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"kleene_star needs a square matrix, got {C.shape}")
    d = C.shape[0]
    if log:
        support = C != NEG_INF
        zero, one = NEG_INF, 0.0
    else:
        C = as_tropical(C)
        support = C > 0
        zero, one = 0.0, 1.0
    dag = Dag.from_matrix(support)
    S = np.full((d, d), zero)
    for i in dag.topological_order():
        row = np.full(d, zero)
        row[i] = one
        for j in dag.parents(i):
            cand = C[i, j] + S[j] if log else C[i, j] * S[j]
            row = np.maximum(row, cand)
        S[i] = row
    return S


def is_fixed_point(Cstar, x, rel_tol=DEFAULT_RTOL):
    """True iff ``Cstar ⊙ x == x`` within ``rel_tol``.

    For a Kleene star this holds exactly when ``x = Cstar ⊙ z`` for some
    nonnegative ``z``.
    """
    x = np.asarray(x, dtype=float)
    return bool(np.all(rel_close(trop_matvec(Cstar, x), x, rel_tol)))


@dataclass(frozen=True)
class ConeMembership:
    member: bool
    witness_z: np.ndarray
    unbounded: np.ndarray
    violated: tuple = ()


def residuate(C, x):
    """Greatest ``z`` with ``C ⊙ z <= x`` (the principal solution).

    Returns ``(z, unbounded)``; columns of ``C`` that are entirely zero on
    the rows considered are unconstrained, flagged in ``unbounded`` and
    carry ``inf`` in ``z``.
    """
    C = as_tropical(C)
    x = np.asarray(x, dtype=float)
    if x.shape != (C.shape[0],):
        raise ValueError(f"shape mismatch: C {C.shape} vs x {x.shape}")
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(C > 0, x[:, None] / np.where(C > 0, C, 1.0), np.inf)
    z = ratio.min(axis=0) if C.shape[0] else np.full(C.shape[1], np.inf)
    return z, np.isinf(z)


def cone_membership(C, x, rel_tol=DEFAULT_RTOL):
    """Test whether ``x`` lies in the tropical cone ``{C ⊙ z : z >= 0}``.

    The witness is the principal solution of :func:`residuate`; when ``x``
    is a member it is the greatest ``z`` with ``C ⊙ z = x``.
    """
    z, unbounded = residuate(C, x)
    C = np.asarray(C, dtype=float)
    zb = np.where(unbounded, 0.0, z)
    recon = trop_matvec(C, zb)
    ok = rel_close(recon, x, rel_tol)
    return ConeMembership(
        member=bool(ok.all()),
        witness_z=z,
        unbounded=unbounded,
        violated=tuple(np.flatnonzero(~ok).tolist()),
    )
