"""Declarative model of the curvature candidate K.

Near each critical point y, in geodesic normal coordinates u taken in a fixed
orthonormal tangent frame, K is exactly

    K(x) = K(y) + sum_k b_k |u_k|^beta,

inside the ball of radius ``rho0``.  Outside the balls K is only defined when a
``background_K`` level is given; it is then blended in over rho0 <= d <= 2 rho0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import OutsideBalls, SchemaError, UnknownName
from .sphere import default_frame, exp_differential, exp_map, log_map, log_map_many

FRAME_TOL = 1e-10


def smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def smoothstep_slope(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, 6.0 * t * (1.0 - t), 0.0)


@dataclass(frozen=True, eq=False)
class CriticalPointSpec:
    name: str
    position: np.ndarray
    beta: float
    b: np.ndarray
    k_value: float
    frame: np.ndarray | None = None

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float)
        norm = np.linalg.norm(pos)
        if norm == 0 or not np.isfinite(norm):
            raise SchemaError(f"point {self.name!r}: position must be a nonzero vector")
        object.__setattr__(self, "position", pos / norm)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "k_value", float(self.k_value))
        if self.frame is not None:
            object.__setattr__(self, "frame", np.asarray(self.frame, dtype=float))

    @property
    def sum_b(self) -> float:
        return float(np.sum(self.b))

    @property
    def index(self) -> int:
        return morse_like_index(self)


def morse_like_index(p: CriticalPointSpec) -> int:
    """Number of strictly negative coefficients b_k."""
    return int(np.count_nonzero(p.b < 0))


@dataclass
class Violation:
    point: str | None
    message: str

    def as_dict(self):
        return {"point": self.point, "message": self.message}


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, point, message):
        self.violations.append(Violation(point, message))

    def as_dict(self):
        return {"ok": self.ok, "violations": [v.as_dict() for v in self.violations]}


class Landscape:
    """Dimension, critical points, ball radius and optional background level."""

    def __init__(self, n: int, points, rho0: float = 0.1, background_K: float | None = None):
        self.n = int(n)
        self.points = tuple(points)
        self.rho0 = float(rho0)
        self.background_K = None if background_K is None else float(background_K)
        for p in self.points:
            if p.position.size != self.n + 1:
                raise SchemaError(f"point {p.name!r}: position needs {self.n + 1} components")
            if p.b.size != self.n:
                raise SchemaError(f"point {p.name!r}: b needs {self.n} components")
            if p.frame is not None and p.frame.shape != (self.n, self.n + 1):
                raise SchemaError(f"point {p.name!r}: frame must be {self.n} x {self.n + 1}")
        self.frames = tuple(p.frame if p.frame is not None else default_frame(p.position)
                            for p in self.points)
        self._by_name = {p.name: i for i, p in enumerate(self.points)}
        self._positions = np.array([p.position for p in self.points]).reshape(-1, self.n + 1)

    # -- lookup ---------------------------------------------------------------
    @property
    def names(self):
        return [p.name for p in self.points]

    def index_of(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownName(f"no critical point named {name!r}") from None

    def point(self, name: str) -> CriticalPointSpec:
        return self.points[self.index_of(name)]

    def frame(self, name: str) -> np.ndarray:
        return self.frames[self.index_of(name)]

    @property
    def gamma_minus(self):
        return [p for p in self.points if p.sum_b < 0]

    # -- geometry -------------------------------------------------------------
    def distances(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.arccos(np.clip(self._positions @ x, -1.0, 1.0))

    def owner_of(self, x) -> int | None:
        """Index of the critical point whose ball contains x, if any."""
        if not self.points:
            return None
        d = self.distances(x)
        i = int(np.argmin(d))
        return i if d[i] < self.rho0 else None

    def normal_coordinates(self, owner: int, x) -> np.ndarray:
        p = self.points[owner]
        return log_map(p.position, self.frames[owner], x)

    def from_normal(self, owner: int, u) -> np.ndarray:
        p = self.points[owner]
        return exp_map(p.position, self.frames[owner], u)

    # -- K --------------------------------------------------------------------
    @staticmethod
    def _expansion(p: CriticalPointSpec, u):
        au = np.abs(u)
        value = p.k_value + np.sum(p.b * au**p.beta, axis=-1)
        grad = p.beta * p.b * np.sign(u) * au ** (p.beta - 1)
        return value, grad

    def k_local(self, x):
        """(K(x), gradient in the owner's normal coordinates)."""
        owner = self.owner_of(np.asarray(x, dtype=float))
        if owner is None:
            raise OutsideBalls("point lies outside every normal-coordinate ball")
        u = self.normal_coordinates(owner, x)
        value, grad = self._expansion(self.points[owner], u)
        return float(value), grad

    def k_global(self, x):
        """(K(x), ambient tangent ascent vector) using the background blend."""
        x = np.asarray(x, dtype=float)
        x = x / np.linalg.norm(x)
        if not self.points:
            if self.background_K is None:
                raise OutsideBalls("no critical points and no background level")
            return self.background_K, np.zeros_like(x)
        d = self.distances(x)
        i = int(np.argmin(d))
        p, frame = self.points[i], self.frames[i]
        if d[i] < self.rho0:
            u = log_map(p.position, frame, x)
            value, grad = self._expansion(p, u)
            return float(value), exp_differential(p.position, frame, u, grad)
        if self.background_K is None:
            raise OutsideBalls("point lies outside every ball and no background_K is set")
        if d[i] >= 2 * self.rho0:
            return self.background_K, np.zeros_like(x)
        u = log_map(p.position, frame, x)
        local, grad = self._expansion(p, u)
        t = (d[i] - self.rho0) / self.rho0
        w = 1.0 - smoothstep(t)
        away = x * np.dot(x, p.position) - p.position
        away /= np.linalg.norm(away)
        dw = -smoothstep_slope(t) / self.rho0 * away
        value = w * local + (1.0 - w) * self.background_K
        gradient = w * exp_differential(p.position, frame, u, grad) + (local - self.background_K) * dw
        return float(value), gradient

    def k_values(self, X: np.ndarray) -> np.ndarray:
        """Vectorized K over points X of shape (N, n+1)."""
        X = np.asarray(X, dtype=float)
        out = np.full(X.shape[0], np.nan if self.background_K is None else self.background_K)
        if not self.points:
            if self.background_K is None:
                raise OutsideBalls("no critical points and no background level")
            return out
        cosd = np.clip(X @ self._positions.T, -1.0, 1.0)
        d = np.arccos(cosd)
        nearest = np.argmin(d, axis=1)
        dmin = d[np.arange(X.shape[0]), nearest]
        reach = self.rho0 if self.background_K is None else 2 * self.rho0
        for i, p in enumerate(self.points):
            sel = (nearest == i) & (dmin < reach)
            if not np.any(sel):
                continue
            u = log_map_many(p.position, self.frames[i], X[sel])
            local, _ = self._expansion(p, u)
            if self.background_K is None:
                out[sel] = local
            else:
                w = 1.0 - smoothstep((dmin[sel] - self.rho0) / self.rho0)
                out[sel] = w * local + (1.0 - w) * self.background_K
        if np.isnan(out).any():
            raise OutsideBalls("quadrature nodes outside every ball and no background_K is set")
        return out

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        pts = []
        for p in self.points:
            d = {"name": p.name, "position": [float(v) for v in p.position], "beta": p.beta,
                 "b": [float(v) for v in p.b], "K": p.k_value}
            if p.frame is not None:
                d["frame"] = [[float(v) for v in row] for row in p.frame]
            pts.append(d)
        out = {"n": self.n, "rho0": self.rho0, "critical_points": pts}
        if self.background_K is not None:
            out["background_K"] = self.background_K
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Landscape":
        if not isinstance(data, dict):
            raise SchemaError("landscape must be a JSON object")
        try:
            n = data["n"]
            raw_points = data["critical_points"]
        except KeyError as exc:
            raise SchemaError(f"missing field {exc.args[0]!r}") from None
        if not isinstance(n, int) or isinstance(n, bool):
            raise SchemaError("field 'n' must be an integer")
        if not isinstance(raw_points, list):
            raise SchemaError("field 'critical_points' must be a list")
        points = []
        for k, raw in enumerate(raw_points):
            if not isinstance(raw, dict):
                raise SchemaError(f"critical point #{k} must be an object")
            try:
                points.append(CriticalPointSpec(
                    name=str(raw["name"]), position=_floats(raw["position"], "position"),
                    beta=_float(raw["beta"], "beta"), b=_floats(raw["b"], "b"),
                    k_value=_float(raw["K"], "K"),
                    frame=None if raw.get("frame") is None else
                    np.array([_floats(row, "frame") for row in raw["frame"]])))
            except KeyError as exc:
                raise SchemaError(f"critical point #{k}: missing field {exc.args[0]!r}") from None
        rho0 = _float(data.get("rho0", 0.1), "rho0")
        bg = data.get("background_K")
        return cls(n, points, rho0=rho0, background_K=None if bg is None else _float(bg, "background_K"))

    @classmethod
    def load(cls, path) -> "Landscape":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path} is not valid JSON: {exc.msg}") from None
        return cls.from_dict(data)


def _float(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"field {what!r} must be a number")
    return float(value)


def _floats(values, what):
    if not isinstance(values, list):
        raise SchemaError(f"field {what!r} must be a list of numbers")
    return np.array([_float(v, what) for v in values])


def validate(spec: Landscape) -> ValidationReport:
    report = ValidationReport()
    n = spec.n
    if not 3 <= n <= 8:
        report.add(None, f"dimension n={n} must lie in 3..8")
    if not spec.rho0 > 0:
        report.add(None, "rho0 must be positive")
    if spec.background_K is not None and not spec.background_K > 0:
        report.add(None, "background_K must be positive")
    seen = set()
    for p, frame in zip(spec.points, spec.frames):
        if p.name in seen:
            report.add(p.name, "duplicate point name")
        seen.add(p.name)
        if not 1.0 < p.beta < n:
            report.add(p.name, "flatness order must lie in (1,n)")
        if np.any(p.b == 0):
            report.add(p.name, "every coefficient b_k must be nonzero")
        if p.sum_b == 0:
            report.add(p.name, "the sum of the coefficients b_k must be nonzero")
        if not p.k_value > 0:
            report.add(p.name, "K(y) must be positive")
        gram = frame @ frame.T
        if (np.max(np.abs(gram - np.eye(n))) > FRAME_TOL
                or np.max(np.abs(frame @ p.position)) > FRAME_TOL):
            report.add(p.name, "frame must be orthonormal and tangent at the point")
    pts = spec.points
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = float(np.arccos(np.clip(np.dot(pts[i].position, pts[j].position), -1, 1)))
            if d < 4 * spec.rho0:
                report.add(pts[i].name, f"ball separation: distance to {pts[j].name} is "
                                        f"{d:.6g} < 4*rho0 = {4 * spec.rho0:.6g}")
    return report
