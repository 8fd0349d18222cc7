"""Innovation (factor) distributions on ``(0, inf)`` with closed forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UnsupportedDistribution(ValueError):
    """Operation needs a closed form the distribution does not provide."""


@dataclass(frozen=True)
class Frechet:
    """Fréchet law ``P(Z <= z) = exp(-(scale / z) ** shape)``."""

    shape: float = 1.0
    scale: float = 1.0

    continuous = True

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("Frechet needs shape > 0 and scale > 0")

    def logcdf(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            out = -((self.scale / np.where(z > 0, z, 1.0)) ** self.shape)
        return np.where(z > 0, out, -np.inf)

    def cdf(self, z):
        return np.exp(self.logcdf(z))

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        zz = np.where(z > 0, z, 1.0)
        t = (self.scale / zz) ** self.shape
        out = np.log(self.shape / self.scale) + (self.shape + 1) * np.log(self.scale / zz) - t
        return np.where(z > 0, out, -np.inf)

    def pdf(self, z):
        return np.exp(self.logpdf(z))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return self.scale * (-np.log(u)) ** (-1.0 / self.shape)

    def ppf_log(self, logu):
        """Inverse CDF at ``exp(logu)``; stable when the probability underflows."""
        with np.errstate(divide="ignore"):
            return self.scale * (-np.asarray(logu, dtype=float)) ** (-1.0 / self.shape)

    def to_dict(self):
        return {"dist": "frechet", "params": {"shape": self.shape, "scale": self.scale}}


@dataclass(frozen=True)
class LogUniform:
    """``log Z`` uniform on ``[log lo, log hi]``."""

    lo: float
    hi: float

    continuous = True

    def __post_init__(self):
        if not (0 < self.lo < self.hi):
            raise ValueError("LogUniform needs 0 < lo < hi")

    @property
    def _width(self):
        return np.log(self.hi) - np.log(self.lo)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            t = (np.log(np.maximum(z, self.lo)) - np.log(self.lo)) / self._width
        return np.clip(t, 0.0, 1.0)

    def logcdf(self, z):
        with np.errstate(divide="ignore"):
            return np.log(self.cdf(z))

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        inside = (z >= self.lo) & (z <= self.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.log(np.where(inside, z, 1.0)) - np.log(self._width)
        return np.where(inside, out, -np.inf)

    def pdf(self, z):
        return np.exp(self.logpdf(z))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return self.lo * np.exp(u * self._width)

    def ppf_log(self, logu):
        return self.ppf(np.exp(logu))

    def to_dict(self):
        return {"dist": "loguniform", "params": {"lo": self.lo, "hi": self.hi}}


@dataclass(frozen=True)
class PointMassMixture:
    """Finite discrete law; for tests only. It has no density."""

    atoms: tuple
    weights: tuple

    continuous = False

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if a.shape != w.shape or a.ndim != 1 or a.size == 0:
            raise ValueError("atoms and weights must be equal-length 1-d sequences")
        if np.any(a <= 0) or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
            raise ValueError("atoms must be positive and weights a probability vector")
        order = np.argsort(a)
        object.__setattr__(self, "atoms", tuple(a[order].tolist()))
        object.__setattr__(self, "weights", tuple(w[order].tolist()))

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        cw = np.cumsum(self.weights)
        idx = np.searchsorted(self.atoms, z, side="right")
        return np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)

    def logcdf(self, z):
        with np.errstate(divide="ignore"):
            return np.log(self.cdf(z))

    def logpdf(self, z):
        raise UnsupportedDistribution("PointMassMixture has no density")

    pdf = logpdf

    def ppf(self, u):
        cw = np.cumsum(self.weights)
        idx = np.searchsorted(cw, np.asarray(u, dtype=float), side="left")
        return np.asarray(self.atoms)[np.minimum(idx, len(self.atoms) - 1)]

    def to_dict(self):
        return {"dist": "pointmass", "params": {"atoms": list(self.atoms), "weights": list(self.weights)}}


UNIT_FRECHET = Frechet(1.0, 1.0)


def from_dict(spec):
    dist = spec["dist"].lower()
    params = spec.get("params", {})
    if dist == "frechet":
        return Frechet(float(params.get("shape", 1.0)), float(params.get("scale", 1.0)))
    if dist == "loguniform":
        return LogUniform(float(params["lo"]), float(params["hi"]))
    if dist == "pointmass":
        return PointMassMixture(tuple(params["atoms"]), tuple(params["weights"]))
    raise ValueError(f"unknown innovation distribution {spec['dist']!r}")


def sample(dists, u):
    """Map uniforms ``u`` of shape ``(n, p)`` through per-column inverse CDFs."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    for j, dist in enumerate(dists):
        out[..., j] = dist.ppf(u[..., j])
    return out
