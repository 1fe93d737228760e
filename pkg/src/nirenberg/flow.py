"""Pseudogradient flow on bubble configurations.

The state is (a_i, log lambda_i) for each bubble; the weights alpha_i are slaved
to the centers, alpha_i ~ K(a_i)^{-(n-2)/4}.  Building blocks:

* Z_i moves log lambda_i at unit speed (lambda_i' = +-lambda_i);
* Y_i moves a_i at unit speed along the gradient of K, gated by a cut-off in
  lambda_i |a_i - y_i|;
* X_i moves a_i along (b_k * moment_k)_k, the direction given by the moment
  integrals when lambda_i |a_i - y_i| is of order one.

Velocities of a_i are carried in the normal coordinates of the ball owning
a_i, or as ambient tangent vectors for centers outside every ball.  They are
scaled by 1/lambda_i, so that lambda_i |a_i - y_i| moves at unit rate.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .conditions import is_balanced, pair_sign
from .energy import (BubbleConfig, balanced_weights, grad_a_expansion, grad_lambda_expansion,
                     j_leading, leading_coefficients, moment_integral)
from .errors import NonFiniteVelocity, UnassignedOwner
from .landscape import smoothstep
from .sphere import Bubble, SpherePoint, exp_differential, exp_map, interaction_epsilon

BLOWUP = "BLOWUP"
EXITED = "EXITED_ADMISSIBILITY"
BOUNDED = "BOUNDED"
MAX_STEPS = "MAX_STEPS"


@dataclass(frozen=True)
class Thresholds:
    eps: float = 0.1
    delta: float = 0.05
    gamma: float = 0.05
    M: float = 100.0
    M0: float = 10.0
    lambda_max: float = 1e6
    m: float = 0.1
    m_prime: float = 0.1
    m0: float = 0.1
    # lambda-decrease coefficient next to the a-motion in V2; near t = delta/2 the
    # a-descent is only O(delta) times the lambda-derivative, so this must be much smaller than m
    m_v2: float = 2e-5
    velocity_floor: float = 1e-8
    step_log: float = 0.05
    step_a: float = 0.1
    step_tol: float = 1e-3
    min_step: float = 1e-7
    sample_ds: float = 0.1
    diagnostics_min_lambda: float = 1e3

    @classmethod
    def from_dict(cls, data: dict) -> "Thresholds":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown threshold(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def chi(t: float, gamma: float) -> float:
    """Increasing cut-off: 0 below gamma, 1/2 at 2 gamma, 1 from 1 on."""
    if t <= 2 * gamma:
        return 0.5 * float(smoothstep((t - gamma) / gamma))
    return 0.5 + 0.5 * float(smoothstep((t - 2 * gamma) / (1 - 2 * gamma)))


def gate(t: float, scale: float) -> float:
    """phi_scale: 0 for t <= scale, 1 for t >= 2 scale."""
    return float(smoothstep((t - scale) / scale))


@dataclass
class RegionTag:
    major: str
    minor: str
    active_sets: dict = field(default_factory=dict)

    def label(self) -> str:
        return f"{self.major}:{self.minor}" if self.minor else self.major


class Velocity:
    """Parameter velocity: d log lambda, a-velocity in owner coordinates, ambient a-velocity."""

    def __init__(self, p: int, n: int):
        self.dlog = np.zeros(p)
        self.du = np.zeros((p, n))
        self.da = np.zeros((p, n + 1))

    def scaled(self, c: float) -> "Velocity":
        out = Velocity(*self.du.shape)
        out.dlog, out.du, out.da = c * self.dlog, c * self.du, c * self.da
        return out

    def __iadd__(self, other):
        self.dlog += other.dlog
        self.du += other.du
        self.da += other.da
        return self


class _Field:
    """Region classification and field assembly for one configuration."""

    def __init__(self, centers, lambdas, landscape, th: Thresholds):
        self.L = landscape
        self.th = th
        self.n = landscape.n
        self.centers = np.asarray(centers, dtype=float)
        self.lam = np.asarray(lambdas, dtype=float)
        self.p = len(self.lam)
        self.owner = [landscape.owner_of(a) for a in self.centers]
        if any(o is None for o in self.owner) and landscape.background_K is None:
            raise UnassignedOwner("a bubble center lies outside every ball and the landscape "
                                  "has no background_K to extend K")
        self.u = [None if o is None else landscape.normal_coordinates(o, a)
                  for o, a in zip(self.owner, self.centers)]
        self.t = np.array([np.inf if u is None else lam * np.linalg.norm(u)
                           for u, lam in zip(self.u, self.lam)])
        pts = [None if o is None else landscape.points[o] for o in self.owner]
        self.pts = pts
        self.beta = np.array([np.nan if q is None else q.beta for q in pts])
        self.sumb = np.array([np.nan if q is None else q.sum_b for q in pts])
        with np.errstate(invalid="ignore"):
            self.lb = self.lam ** self.beta
        self.top = None

    # -- helpers ----------------------------------------------------------------
    def zero(self) -> Velocity:
        return Velocity(self.p, self.n)

    def Z(self, weights: dict) -> Velocity:
        v = self.zero()
        for i, c in weights.items():
            v.dlog[i] += c
        return v

    def sign(self, i, j) -> int:
        return pair_sign(self.n, self.beta[i], self.beta[j])

    def _label(self, major, minor, **sets):
        if self.top is None:
            self.top = RegionTag(major, minor, {k: sorted(int(x) for x in v) if isinstance(v, (list, set, tuple))
                                                else v for k, v in sets.items()})

    def grad_direction(self, i) -> np.ndarray:
        q, u = self.pts[i], self.u[i]
        g = q.beta * q.b * np.sign(u) * np.abs(u) ** (q.beta - 1)
        norm = np.linalg.norm(g)
        return g / norm if norm > 0 else g

    def moment_direction(self, i) -> np.ndarray:
        q, u = self.pts[i], self.u[i]
        v = np.array([q.b[k] * moment_integral(self.n, q.beta, self.lam[i] * u[k] / 2.0)
                      for k in range(self.n)])
        norm = np.linalg.norm(v)
        return v / norm if norm > 0 else v

    def Y(self, i, scale) -> Velocity:
        v = self.zero()
        w = gate(self.t[i], scale)
        if w > 0:
            v.du[i] = w * self.grad_direction(i) / self.lam[i]
        return v

    def bubble_matrix(self, idx) -> np.ndarray:
        names = [self.pts[i].name for i in idx]
        c = leading_coefficients(self.L, names, normalization="bubble")
        M = -c.K_ij
        M[np.diag_indices_from(M)] = -c.K_i
        return M

    # -- dispatch -------------------------------------------------------------
    def field(self, S) -> Velocity:
        S = list(S)
        if not S:
            return self.zero()
        if any(self.owner[i] is None for i in S):
            return self.v4(S)
        owners = [self.owner[i] for i in S]
        if len(set(owners)) < len(owners):
            return self.v3(S)
        w = max(float(smoothstep((self.t[i] - self.th.delta / 2) / (self.th.delta / 2))) for i in S)
        if w <= 0:
            return self.v1(S)
        if w >= 1:
            return self.v2(S)
        self._label("V2", "V1-overlap", weight=w)
        out = self.v1(S).scaled(1 - w)
        out += self.v2(S).scaled(w)
        return out

    # -- V1 -------------------------------------------------------------------
    def v1(self, S) -> Velocity:
        if len(S) == 1:
            i = S[0]
            self._label("V1", "p1")
            return self.Z({i: -self.sumb[i]})
        signs = [self.sign(i, j) for k, i in enumerate(S) for j in S[k + 1:]]
        if all(s > 0 for s in signs):
            return self.w1(S)
        if all(s >= 0 for s in signs):
            return self.w2(S)
        return self.w3(S)

    def w1(self, S) -> Velocity:
        pos = [i for i in S if self.sumb[i] > 0]
        if not pos:
            self._label("V1", "W1-case1")
            return self.Z({i: 1.0 for i in S})
        thr = 0.5 * min(self.lb[j] for j in pos)
        I = [i for i in S if self.lb[i] <= thr]
        self._label("V1", "W1-case2", I=I, positive=pos)
        weights = {i: 1.0 for i in I}
        for j in pos:
            weights[j] = weights.get(j, 0.0) - 1.0
        return self.Z(weights)

    def cluster(self, A) -> Velocity:
        """Field on a cluster of balanced points (beta = n-2)."""
        M = self.bubble_matrix(A)
        if all(self.sumb[i] < 0 for i in A) and np.linalg.eigvalsh(M)[0] > 0:
            return self.Z({i: 1.0 for i in A})
        Lam = self.lam[A] ** (-(self.n - 2) / 2)
        g = Lam * (M @ Lam)
        g = g / np.max(np.abs(g))
        return self.Z({i: float(c) for i, c in zip(A, g)})

    def w2(self, S) -> Velocity:
        A0 = [i for i in S if any(self.sign(i, j) == 0 for j in S if j != i)]
        if any(is_balanced(self.beta[i], self.n) for i in A0):
            return self.w2_balanced(S, A0)
        return self.w2_star(S, A0)

    def w2_balanced(self, S, A0) -> Velocity:
        th = self.th
        u1 = [i for i in S if i not in A0]
        u1_blows = all(self.sumb[i] < 0 for i in u1)
        M = self.bubble_matrix(A0)
        u2_blows = all(self.sumb[i] < 0 for i in A0) and np.linalg.eigvalsh(M)[0] > 0
        if u1_blows and u2_blows:
            self._label("V1", "W2-case1-subcase1", A0=A0)
            return self.Z({i: 1.0 for i in S})
        parts = []
        if not u1_blows:
            i1 = min(u1, key=lambda i: (self.lb[i], i))
            I1 = [i for i in S if self.lb[i] <= 0.5 * self.lb[i1]]
            v = self.w1(u1)
            v += self.Z({i: -th.m for i in S if i not in I1})
            if I1:
                sub = self.cluster(I1) if all(is_balanced(self.beta[i], self.n) for i in I1) \
                    else self.v1(I1)
                v += sub.scaled(th.m_prime)
            parts.append(("subcase2", v))
        if not u2_blows:
            thr = 0.5 * min(self.lb[i] for i in A0)
            I1 = [i for i in S if self.lb[i] <= thr]
            v = self.cluster(A0)
            v += self.Z({i: -th.m for i in S if i not in I1})
            if I1:
                v += self.v1(I1).scaled(th.m_prime)
            parts.append(("subcase3", v))
        self._label("V1", "W2-case1-" + "+".join(name for name, _ in parts), A0=A0)
        out = self.zero()
        for _, v in parts:
            out += v.scaled(1.0 / len(parts))
        return out

    def w2_star(self, S, A0) -> Velocity:
        th = self.th
        n = self.n
        j0 = next(i for i in A0 if self.beta[i] > n - 2)
        Aj = [i for i in A0 if i != j0]
        idx = Aj + [j0]
        names = [self.pts[i].name for i in idx]
        c = leading_coefficients(self.L, names, normalization="bubble")
        K_i = dict(zip(idx, c.K_i))
        K_ij0 = dict(zip(Aj, c.K_ij[:-1, -1]))
        e = (n - 2) / 2
        ratio = {i: (K_ij0[i] / (self.lam[i] * self.lam[j0]) ** e) / (abs(K_i[i]) / self.lb[i])
                 for i in Aj}
        rmin = min(ratio.values())
        w1 = 1.0 - float(smoothstep((rmin - (1 - 2 * th.gamma)) / th.gamma))
        v = self.zero()
        minor = []
        if w1 > 0:
            I = [i for i in Aj if ratio[i] < 1 - th.gamma]
            part = self.Z({i: -self.sumb[i] for i in I})
            part += self.Z({i: -th.m for i in Aj})
            v += part.scaled(w1)
            minor.append("subcase1")
        if w1 < 1:
            I2 = [i for i in Aj if 1 - 2 * th.gamma < ratio[i] < 1 + 2 * th.gamma]
            S_I = sum(abs(K_i[i]) * (K_ij0[i] / abs(K_i[i])) ** (2 * self.beta[j0] / (n - 2))
                      for i in I2)
            part = self.Z({i: -1.0 for i in Aj if i not in I2})
            part += self.Z({j0: -th.m * float(np.sign(S_I + K_i[j0]))})
            v += part.scaled(1 - w1)
            minor.append("subcase2")
        i1 = min(Aj, key=lambda i: (self.lam[i], i))
        I1 = [i for i in S if self.lb[i] >= (self.lam[i1] / 2) ** self.beta[i1]]
        rest = [i for i in S if i not in I1]
        self._label("V1", "W2-case2-" + "+".join(minor), A0=A0, j0=int(j0), I1=I1)
        if rest:
            v += self.v1(rest)
        return v

    def w3(self, S) -> Velocity:
        th = self.th
        order = sorted(S, key=lambda i: (self.lb[i], i))
        first = order[0]
        I = [i for i in order if self.lb[i] <= th.M * self.lb[first]]
        if len(I) == 1:
            self._label("V1", "W3-case1", I=I)
            weights = {i: -1.0 for i in order[1:]}
            weights[first] = -th.m * self.sumb[first]
            return self.Z(weights)
        if all(self.sign(i, j) >= 0 for k, i in enumerate(I) for j in I[k + 1:]):
            self._label("V1", "W3-case2-subcase1", I=I)
            v = self.v1(I).scaled(th.m)
            v += self.Z({i: -1.0 for i in S if i not in I})
            return v
        self._label("V1", "W3-case2-subcase2", I=I)
        return self.Z({i: -1.0 for i in S})

    # -- V2 -------------------------------------------------------------------
    def v2(self, S) -> Velocity:
        th = self.th
        A0 = [i for i in S if self.t[i] > th.delta / 2]
        thr = 0.5 * min(self.lb[i] for i in A0)
        A0t = [i for i in S if self.lb[i] >= thr]
        rest = [i for i in S if i not in A0t]
        self._label("V2", "", A0=A0, A0_tilde=A0t)
        v = self.zero()
        for i in A0:
            # below 1/delta the moment direction, above it the gradient of K;
            # the switch uses the case-local scale 1/delta rather than M
            w = gate(self.t[i], 1.0 / th.delta)
            direction = (1 - w) * (self.moment_direction(i) if w < 1 else 0.0)
            if w > 0:
                direction = direction + w * self.grad_direction(i)
            # past t = 1, let lambda|u| grow geometrically so the center leaves the ball in O(log lambda)
            v.du[i] += direction * max(1.0, self.t[i]) / self.lam[i]
            v.dlog[i] -= th.m_v2
        for j in A0t:
            if j not in A0:
                v.dlog[j] -= th.m_v2
        if rest:
            v += self.field(rest).scaled(th.m_prime)
        return v

    # -- V3 -------------------------------------------------------------------
    def v3(self, S) -> Velocity:
        th = self.th
        groups = {}
        for i in S:
            groups.setdefault(self.owner[i], []).append(i)
        v = self.zero()
        D, shared, R_flags = [], [], {}
        for owner, B in groups.items():
            if len(B) == 1:
                D.append(B[0])
                continue
            ik = min(B, key=lambda i: (self.lam[i], i))
            R = {j: any(2 * th.gamma * self.lam[j] <= self.lam[i] <= self.lam[j] / (2 * th.gamma)
                        for i in B if i != j) for j in B}
            R_flags.update(R)
            Bstar = B if R[ik] else [j for j in B if j != ik]
            if not R[ik]:
                D.append(ik)
            shared.extend(Bstar)
            for j in Bstar:
                chibar = sum(chi(self.lam[j] / self.lam[i], th.gamma) for i in B if i != j)
                v.dlog[j] -= chibar
                v += self.Y(j, th.M0)
                if R[j]:
                    v += self.Y(j, th.M).scaled(th.m0)
        self._label("V3", "", D=D, R=[j for j, r in R_flags.items() if r])
        if D:
            v += self.field(D).scaled(th.m0)
        for j in S:
            if j not in D:
                v += self.Y(j, th.M).scaled(th.m0)
        return v

    # -- V4 -------------------------------------------------------------------
    def v4(self, S) -> Velocity:
        th = self.th
        order = sorted(S, key=lambda i: (self.lam[i], i))
        j1 = next(i for i in order if self.owner[i] is None)
        r0 = next(r for r, i in enumerate(order) if self.lam[i] >= 0.5 * self.lam[j1])
        self._label("V4", "", j1=int(j1), j0=int(order[r0]))
        v = self.zero()
        _, grad = self.L.k_global(self.centers[j1])
        norm = np.linalg.norm(grad)
        if norm > 1e-14:
            v.da[j1] = th.m * grad / (norm * self.lam[j1])
        scale = 2.0 ** len(order)
        for r in range(r0, len(order)):
            v.dlog[order[r]] -= 2.0 ** (r + 1) / scale
        if r0 > 0:
            v += self.field(order[:r0]).scaled(th.m_prime)
        return v

    # -- ambient --------------------------------------------------------------
    def ambient(self, vel: Velocity) -> np.ndarray:
        da = vel.da.copy()
        for i in range(self.p):
            if self.owner[i] is not None and np.any(vel.du[i]):
                q = self.pts[i]
                da[i] += exp_differential(q.position, self.L.frames[self.owner[i]], self.u[i], vel.du[i])
        return da


def _field_for(config: BubbleConfig, landscape, th: Thresholds):
    return _Field(config.centers, config.lambdas, landscape, th)


def classify_region(config: BubbleConfig, landscape, thresholds: Thresholds | None = None) -> RegionTag:
    f = _field_for(config, landscape, thresholds or Thresholds())
    f.field(range(f.p))
    return f.top


@dataclass
class ParameterVelocity:
    """Velocity of (alpha, a, lambda); alpha is slaved to a, so d_alpha is zero."""
    d_alpha: np.ndarray
    d_a: np.ndarray
    d_lambda: np.ndarray
    d_log_lambda: np.ndarray
    d_u: np.ndarray


def assemble_pseudogradient(config: BubbleConfig, landscape, tag: RegionTag | None = None,
                            thresholds: Thresholds | None = None) -> ParameterVelocity:
    f = _field_for(config, landscape, thresholds or Thresholds())
    vel = f.field(range(f.p))
    if tag is not None and tag.label() != f.top.label():
        raise ValueError("region tag is stale for this configuration")
    return ParameterVelocity(np.zeros(f.p), f.ambient(vel), f.lam * vel.dlog, vel.dlog, vel.du)


# -- integration ---------------------------------------------------------------

@dataclass
class FlowSample:
    s: float
    config: BubbleConfig
    region: RegionTag
    J_leading: float
    descent: float | None = None
    rate_pointwise: float | None = None
    rate_max_beta: float | None = None


@dataclass
class FlowTrace:
    samples: list
    terminal: str
    members: tuple | None = None
    steps: int = 0

    @property
    def final(self) -> FlowSample:
        return self.samples[-1]


def descent_rate(config: BubbleConfig, landscape, dlog, du, th: Thresholds):
    """Leading-order <dJ, W> assembled from the gradient expansions."""
    total = 0.0
    for i, b in enumerate(config.bubbles):
        total += dlog[i] * grad_lambda_expansion(config, landscape, i)
        if np.any(du[i]):
            for k in range(config.n):
                if du[i][k]:
                    total += b.concentration * du[i][k] * grad_a_expansion(config, landscape, i, k,
                                                                           m0=th.M0)
    return float(total)


def _rates(f: _Field, config: BubbleConfig):
    """Size of the descent bound with per-point beta and with the global max beta."""
    inter = sum(interaction_epsilon(config.bubbles[i], config.bubbles[j], config.n)
                for i in range(f.p) for j in range(i + 1, f.p))
    grads = []
    for i in range(f.p):
        q, u = f.pts[i], f.u[i]
        g = q.beta * q.b * np.sign(u) * np.abs(u) ** (q.beta - 1)
        grads.append(np.linalg.norm(g) / f.lam[i])
    bmax = max(q.beta for q in f.L.points)
    point = sum(f.lam ** (-f.beta)) + sum(grads) + inter
    top = sum(f.lam ** (-bmax)) + sum(grads) + inter
    return float(point), float(top)


def _config(n, centers, lam, landscape) -> BubbleConfig:
    cfg = BubbleConfig(n, [Bubble(SpherePoint(a), float(l), 1.0) for a, l in zip(centers, lam)])
    alpha = balanced_weights(cfg, landscape)
    return BubbleConfig(n, [Bubble(b.center, b.concentration, float(w))
                            for b, w in zip(cfg.bubbles, alpha)])


def _exited(centers, lam, n, th) -> bool:
    if np.any(lam < 1.0 / th.eps):
        return True
    bubbles = [Bubble(SpherePoint(a), float(l)) for a, l in zip(centers, lam)]
    for i in range(len(bubbles)):
        for j in range(i + 1, len(bubbles)):
            if interaction_epsilon(bubbles[i], bubbles[j], n) >= th.eps:
                return True
    return False


def _advance(centers, loglam, da, dlog, ds):
    new = centers + ds * da
    new /= np.linalg.norm(new, axis=1, keepdims=True)
    return new, loglam + ds * dlog


def integrate_flow(config0: BubbleConfig, landscape, controls: dict | None = None,
                   thresholds: Thresholds | None = None) -> FlowTrace:
    """Integrate the pseudogradient with an adaptive Heun scheme.

    ``controls`` accepts ``max_s`` (default 60) and ``max_steps`` (default 20000).
    """
    th = thresholds or Thresholds()
    controls = controls or {}
    max_s = float(controls.get("max_s", 60.0))
    max_steps = int(controls.get("max_steps", 20000))
    n = config0.n
    centers = config0.centers.copy()
    loglam = np.log(config0.lambdas)
    s = 0.0
    samples = []
    next_sample = 0.0

    def evaluate(c, ll):
        f = _Field(c, np.exp(ll), landscape, th)
        vel = f.field(range(f.p))
        da = f.ambient(vel)
        if not (np.all(np.isfinite(vel.dlog)) and np.all(np.isfinite(da))):
            raise NonFiniteVelocity("velocity is not finite", sample=(s, c.copy(), ll.copy()))
        return f, vel, da

    def record(f, vel):
        cfg = _config(n, centers, np.exp(loglam), landscape)
        descent = point = top = None
        if all(o is not None for o in f.owner):
            point, top = _rates(f, cfg)
            if np.min(f.lam) >= th.diagnostics_min_lambda:
                descent = descent_rate(cfg, landscape, vel.dlog, vel.du, th)
        samples.append(FlowSample(s, cfg, f.top, j_leading(cfg, landscape), descent, point, top))

    f, vel, da = evaluate(centers, loglam)
    record(f, vel)
    next_sample = th.sample_ds
    ds = th.step_log
    steps = 0
    terminal, members = MAX_STEPS, None
    while True:
        if _exited(centers, np.exp(loglam), n, th):
            terminal = EXITED
            break
        lam = np.exp(loglam)
        if np.all(lam > th.lambda_max):
            terminal = BLOWUP
            members = tuple(sorted(landscape.points[o].name if o is not None else "?"
                                   for o in f.owner))
            break
        speed = math.sqrt(float(np.sum(vel.dlog**2) + np.sum(da**2)))
        if speed < th.velocity_floor:
            terminal = BOUNDED
            break
        if s >= max_s or steps >= max_steps:
            break
        # step size from velocity magnitudes
        limit = th.step_log / max(np.max(np.abs(vel.dlog)), 1e-300)
        for i in range(f.p):
            a_speed = np.linalg.norm(da[i])
            if a_speed > 0:
                r = f.t[i] / lam[i] if np.isfinite(f.t[i]) else landscape.rho0
                limit = min(limit, th.step_a * max(r, 1.0 / lam[i]) / a_speed)
        ds = min(max(ds * 2.0, th.min_step), limit, max_s - s, next_sample - s)
        ds = max(ds, 1e-12)
        while True:
            c1, l1 = _advance(centers, loglam, da, vel.dlog, ds)
            f1, vel1, da1 = evaluate(c1, l1)
            err = 0.5 * ds * math.sqrt(float(np.sum((vel1.dlog - vel.dlog) ** 2)
                                             + np.sum((da1 - da) ** 2)))
            if err <= th.step_tol or ds <= th.min_step:
                break
            ds = max(ds / 2.0, th.min_step)
        centers, loglam = _advance(centers, loglam, 0.5 * (da + da1), 0.5 * (vel.dlog + vel1.dlog), ds)
        s += ds
        steps += 1
        f, vel, da = evaluate(centers, loglam)
        if s >= next_sample - 1e-9:
            record(f, vel)
            next_sample += th.sample_ds
    if samples[-1].s != s:
        record(f, vel)
    return FlowTrace(samples, terminal, members, steps)


# -- terminal classification ----------------------------------------------------

def classify_terminal(trace: FlowTrace, catalog) -> str:
    if trace.terminal == MAX_STEPS:
        raise ValueError("trace stopped at the step budget; no verdict")
    if trace.terminal == BLOWUP:
        allowed = {frozenset(c.members) for c in catalog}
        members = trace.members or ()
        if len(set(members)) == len(members) and frozenset(members) in allowed:
            return "VALID"
        return "ANOMALY"
    if trace.terminal == BOUNDED:
        return "VALID-COMPACT"
    return "NO-CLAIM"


# -- initial data, traces, sweeps ------------------------------------------------

def random_initial_config(landscape, p: int, rng, lambda0: float | None = None,
                          th: Thresholds | None = None, offset: float | None = None) -> BubbleConfig:
    """p bubbles at distinct random critical points, slightly off-center.

    lambda_i |a_i - y_i| is uniform in [0, offset] (default 2 delta).
    """
    th = th or Thresholds()
    if p > len(landscape.points):
        raise ValueError(f"p={p} exceeds the number of critical points")
    offset = 2 * th.delta if offset is None else offset
    owners = rng.choice(len(landscape.points), size=p, replace=False)
    centers, lams = [], []
    for o in owners:
        lam = float(lambda0) if lambda0 is not None else float(np.exp(rng.uniform(np.log(30), np.log(300))))
        direction = rng.normal(size=landscape.n)
        direction /= np.linalg.norm(direction)
        u = direction * rng.uniform(0.0, offset) / lam
        centers.append(landscape.from_normal(int(o), u))
        lams.append(lam)
    return _config(landscape.n, centers, lams, landscape)


def centered_config(landscape, names, lambdas) -> BubbleConfig:
    centers = [landscape.point(nm).position for nm in names]
    if np.isscalar(lambdas):
        lambdas = [lambdas] * len(centers)
    return _config(landscape.n, centers, lambdas, landscape)


def trace_header(n: int, p: int):
    cols = ["s", "region"]
    for i in range(1, p + 1):
        cols.append(f"alpha_{i}")
        cols.extend(f"a_{i}_{k}" for k in range(n + 1))
        cols.append(f"lambda_{i}")
    return cols + ["J_leading", "terminal"]


def write_trace_csv(trace: FlowTrace, path) -> None:
    first = trace.samples[0].config
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(first.n, first.p))
        for k, smp in enumerate(trace.samples):
            row = [repr(float(smp.s)), smp.region.label()]
            for b in smp.config.bubbles:
                row.append(repr(float(b.weight)))
                row.extend(repr(float(x)) for x in b.center.coords)
                row.append(repr(float(b.concentration)))
            row.append(repr(float(smp.J_leading)))
            last = k == len(trace.samples) - 1
            if last and trace.terminal == BLOWUP:
                row.append(f"{BLOWUP}({','.join(trace.members)})")
            else:
                row.append(trace.terminal if last else "")
            w.writerow(row)


def sweep(landscape, p: int, count: int, seed: int = 0, lambda0=None, max_s: float = 60.0,
          thresholds: Thresholds | None = None):
    """Run ``count`` seeded trajectories; returns (traces, outcome summary)."""
    th = thresholds or Thresholds()
    traces = []
    tally = {}
    for k in range(count):
        rng = np.random.default_rng(seed + k)
        cfg = random_initial_config(landscape, p, rng, lambda0, th)
        tr = integrate_flow(cfg, landscape, {"max_s": max_s}, th)
        traces.append(tr)
        key = (tr.terminal, tr.members or ())
        tally[key] = tally.get(key, 0) + 1
    outcomes = [{"terminal": t, "members": list(m), "count": c}
                for (t, m), c in sorted(tally.items())]
    return traces, outcomes
