"""Geometric primitives on the round sphere S^n embedded in R^{n+1}.

Points are unit vectors.  Bubbles are the standard solutions of the
Yamabe equation -L u = u^{(n+2)/(n-2)}, where -L = -4(n-1)/(n-2) Lap + n(n-1)
is the conformal Laplacian of the round metric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import c0
from .errors import SingularPoint

SINGULAR_DISTANCE = 1e-9


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("a point of the sphere needs a nonzero finite vector")
    return v / norm


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """A point of S^n, renormalized on construction."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _unit(self.coords))

    @property
    def dim(self) -> int:
        return self.coords.size - 1

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)


def as_coords(x) -> np.ndarray:
    if isinstance(x, SpherePoint):
        return x.coords
    return _unit(x)


@dataclass(frozen=True, eq=False)
class Bubble:
    center: SpherePoint
    concentration: float
    weight: float = 1.0

    def __post_init__(self):
        if not isinstance(self.center, SpherePoint):
            object.__setattr__(self, "center", SpherePoint(self.center))
        if not self.concentration > 0:
            raise ValueError("concentration must be positive")
        if not self.weight > 0:
            raise ValueError("weight must be positive")


def _cos_between(a, b) -> float:
    return float(np.clip(np.dot(as_coords(a), as_coords(b)), -1.0, 1.0))


def geodesic_distance(a, b) -> float:
    return float(np.arccos(_cos_between(a, b)))


def bubble_profile(center, lam: float, X: np.ndarray, n: int) -> np.ndarray:
    """Vectorized bubble over an array of unit vectors ``X`` of shape (..., n+1)."""
    cosd = np.clip(X @ as_coords(center), -1.0, 1.0)
    base = lam / (lam * lam + 1.0 + (1.0 - lam * lam) * cosd)
    return c0(n) * base ** ((n - 2) / 2)


def bubble_value(b: Bubble, x, n: int) -> float:
    if n < 3:
        raise ValueError("bubbles need n >= 3")
    lam = b.concentration
    cosd = _cos_between(b.center, x)
    return c0(n) * (lam / (lam * lam + 1.0 + (1.0 - lam * lam) * cosd)) ** ((n - 2) / 2)


def green_function(x, y, n: int) -> float:
    """(1 - cos d)^{-(n-2)/2}; this normalization makes eps_ij ~ 2^{(n-2)/2} G/(l_i l_j)^{(n-2)/2}."""
    cosd = _cos_between(x, y)
    if np.arccos(cosd) <= SINGULAR_DISTANCE:
        raise SingularPoint("Green function evaluated at coincident points")
    return (1.0 - cosd) ** (-(n - 2) / 2)


def _interaction_base(li, lj, cosd):
    return li / lj + lj / li + li * lj * (1.0 - cosd) / 2.0


def interaction_epsilon(b_i: Bubble, b_j: Bubble, n: int) -> float:
    li, lj = b_i.concentration, b_j.concentration
    cosd = _cos_between(b_i.center, b_j.center)
    return _interaction_base(li, lj, cosd) ** ((2 - n) / 2)


def dlog_eps_dlog_lambda(b_i: Bubble, b_j: Bubble, n: int) -> float:
    """lambda_i * d(eps_ij)/d(lambda_i), from the closed form of eps_ij."""
    li, lj = b_i.concentration, b_j.concentration
    cosd = _cos_between(b_i.center, b_j.center)
    eps = _interaction_base(li, lj, cosd) ** ((2 - n) / 2)
    dbase = 1.0 / lj - lj / li**2 + lj * (1.0 - cosd) / 2.0
    return -((n - 2) / 2) * eps ** (n / (n - 2)) * dbase * li


# -- tangent frames and normal coordinates ---------------------------------

def default_frame(y) -> np.ndarray:
    """Orthonormal tangent frame at y, shape (n, n+1).

    Gram-Schmidt on the coordinate axes least aligned with y (stable order).
    """
    y = as_coords(y)
    order = np.argsort(np.abs(y), kind="stable")
    vectors = []
    for axis in order:
        v = np.zeros_like(y)
        v[axis] = 1.0
        v = v - np.dot(v, y) * y
        for w in vectors:
            v = v - np.dot(v, w) * w
        norm = np.linalg.norm(v)
        if norm < 1e-8:
            continue
        vectors.append(v / norm)
        if len(vectors) == y.size - 1:
            break
    return np.array(vectors)


def log_map(y, frame: np.ndarray, x) -> np.ndarray:
    """Geodesic normal coordinates of x around y, expressed in ``frame``."""
    y = as_coords(y)
    x = as_coords(x)
    cosd = float(np.clip(np.dot(x, y), -1.0, 1.0))
    w = x - cosd * y
    wn = np.linalg.norm(w)
    if wn < 1e-300:
        return np.zeros(frame.shape[0])
    theta = np.arctan2(wn, cosd)
    return theta * (frame @ w) / wn


def log_map_many(y, frame: np.ndarray, X: np.ndarray) -> np.ndarray:
    y = as_coords(y)
    cosd = np.clip(X @ y, -1.0, 1.0)
    W = X - cosd[..., None] * y
    wn = np.linalg.norm(W, axis=-1)
    theta = np.arctan2(wn, cosd)
    scale = np.where(wn > 1e-300, theta / np.where(wn > 0, wn, 1.0), 0.0)
    return (W @ frame.T) * scale[..., None]


def exp_map(y, frame: np.ndarray, u) -> np.ndarray:
    y = as_coords(y)
    u = np.asarray(u, dtype=float)
    r = np.linalg.norm(u)
    if r == 0.0:
        return y.copy()
    x = np.cos(r) * y + np.sin(r) * (frame.T @ u) / r
    return x / np.linalg.norm(x)


def exp_differential(y, frame: np.ndarray, u, v) -> np.ndarray:
    """Ambient tangent vector d/dt exp_y(u + t v) at t = 0."""
    y = as_coords(y)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    r = np.linalg.norm(u)
    if r < 1e-14:
        return frame.T @ v
    uh = u / r
    v_par = float(np.dot(v, uh))
    v_perp = v - v_par * uh
    radial = -np.sin(r) * y + np.cos(r) * (frame.T @ uh)
    return v_par * radial + (np.sin(r) / r) * (frame.T @ v_perp)
