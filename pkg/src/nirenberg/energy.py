"""The reduced functional J on sums of bubbles and its gradient expansions.

    J(u) = ||u||^2 / (int K u^{2n/(n-2)})^{(n-2)/n},   u = sum_i alpha_i delta_i

Quadrature uses one tensor Gauss-Legendre grid per bubble, centered at the
bubble and stretched to its concentration scale; a partition of unity built
from the bubbles themselves splits each integrand between the grids.

The expansions follow the structure of the classical asymptotic formulas, with
normalization constants worked out for the bubble convention used here
(delta has flat scale lambda/2 near its center, and the amplitude c0 of
:func:`nirenberg.constants.c0`).  For u on the unit sphere of H^1 and the flat
convention delta = (lambda/(1+lambda^2|x|^2))^{(n-2)/2} the formulas reduce to
the textbook ones except for the self-interaction constant, see
:func:`self_coefficient`.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .constants import c0, c_beta, c_tilde_1, c_tilde_2, check_dimension
from .errors import OutsideBalls, QuadratureNotConverged
from .sphere import (Bubble, SpherePoint, bubble_profile, default_frame, dlog_eps_dlog_lambda,
                     green_function, interaction_epsilon)

DEFAULT_GRIDS = {3: (64, 32, 32), 4: (48, 24, 24, 24)}
CONVERGENCE_RTOL = 1e-3


@dataclass
class BubbleConfig:
    n: int
    bubbles: list

    @property
    def p(self) -> int:
        return len(self.bubbles)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([b.concentration for b in self.bubbles])

    @property
    def weights(self) -> np.ndarray:
        return np.array([b.weight for b in self.bubbles])

    @property
    def centers(self) -> np.ndarray:
        return np.array([b.center.coords for b in self.bubbles])

    @classmethod
    def from_arrays(cls, n, weights, centers, lambdas) -> "BubbleConfig":
        return cls(n, [Bubble(SpherePoint(a), float(l), float(w))
                       for w, a, l in zip(weights, centers, lambdas)])


def single_bubble_config(n: int, center=None, lam: float = 1.0, weight: float = 1.0) -> BubbleConfig:
    if center is None:
        center = np.eye(n + 1)[0]
    return BubbleConfig(n, [Bubble(SpherePoint(center), lam, weight)])


def critical_exponent(n: int) -> float:
    return 2 * n / (n - 2)


# -- quadrature ---------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _angular_grid(m: int, sizes: tuple):
    """Nodes and weights on S^{m} (m >= 1) in hyperspherical coordinates."""
    *polar_sizes, az_size = sizes
    x, w = np.polynomial.legendre.leggauss(az_size)
    phi = np.pi * (x + 1.0)
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    weights = np.pi * w
    # add one polar angle at a time: S^{j} from S^{j-1}
    for j, size in zip(range(2, m + 1), reversed(polar_sizes)):
        x, w = np.polynomial.legendre.leggauss(size)
        psi = 0.5 * np.pi * (x + 1.0)
        wpsi = 0.5 * np.pi * w * np.sin(psi) ** (j - 1)
        nodes = np.concatenate([
            np.repeat(np.cos(psi), nodes.shape[0])[:, None],
            np.kron(np.sin(psi)[:, None], nodes)], axis=1)
        weights = np.kron(wpsi, weights)
    return nodes, weights


def bubble_grid(center, lam: float, n: int, sizes=None, breaks=()):
    """Quadrature nodes X (N, n+1) and weights W (N,) on S^n adapted to a bubble.

    The geodesic radius is theta = 2 arctan(tan(phi)/lam) with phi Gauss-Legendre
    on [0, pi/2]; in this variable the bubble's energy density is a trigonometric
    polynomial, whatever lam is.  ``breaks`` are geodesic radii where the
    integrand is known to lose smoothness; each panel between them gets its own
    Gauss-Legendre rule.
    """
    sizes = tuple(sizes or DEFAULT_GRIDS[n])
    if len(sizes) != n:
        raise ValueError(f"grid for S^{n} needs {n} sizes")
    center = np.asarray(center, dtype=float)
    edges = [0.0] + sorted(np.arctan(lam * np.tan(r / 2)) for r in breaks if 0 < r < np.pi) \
        + [0.5 * np.pi]
    x, w = np.polynomial.legendre.leggauss(sizes[0])
    phi = np.concatenate([lo + 0.5 * (hi - lo) * (x + 1.0) for lo, hi in zip(edges, edges[1:])])
    wphi = np.concatenate([0.5 * (hi - lo) * w for lo, hi in zip(edges, edges[1:])])
    theta = 2.0 * np.arctan2(np.sin(phi), lam * np.cos(phi))
    dtheta = 2.0 * lam / (lam**2 * np.cos(phi) ** 2 + np.sin(phi) ** 2)
    radial_w = wphi * dtheta * np.sin(theta) ** (n - 1)
    omega, omega_w = _angular_grid(n - 1, sizes[1:])
    frame = default_frame(center)
    directions = omega @ frame
    X = (np.cos(theta)[:, None, None] * center[None, None, :]
         + np.sin(theta)[:, None, None] * directions[None, :, :]).reshape(-1, n + 1)
    W = np.outer(radial_w, omega_w).ravel()
    return X, W


def _kink_radii(landscape, center):
    """Radii around ``center`` where K switches between expansion, blend and background."""
    if landscape is None or not landscape.points:
        return ()
    d = float(np.min(landscape.distances(center)))
    if d >= landscape.rho0:
        return ()
    radii = [landscape.rho0 - d]
    if landscape.background_K is not None:
        radii.append(2 * landscape.rho0 - d)
    return tuple(radii)


def _integrals(config: BubbleConfig, landscape, sizes):
    n = config.n
    N_exp = critical_exponent(n)
    p_exp = (n + 2) / (n - 2)
    alphas = config.weights
    Q = 0.0
    N = 0.0
    for k, bk in enumerate(config.bubbles):
        X, W = bubble_grid(bk.center.coords, bk.concentration, n, sizes,
                           breaks=_kink_radii(landscape, bk.center.coords))
        D = np.array([bubble_profile(b.center, b.concentration, X, n) for b in config.bubbles])
        aD = alphas[:, None] * D
        u = aD.sum(axis=0)
        if config.p > 1:
            powers = aD**N_exp
            part = powers[k] / powers.sum(axis=0)
        else:
            part = 1.0
        K = 1.0 if landscape is None else landscape.k_values(X)
        Q += np.sum(W * part * (alphas[:, None] * D**p_exp).sum(axis=0) * u)
        N += np.sum(W * part * K * u**N_exp)
    return Q, N


def j_numeric(config: BubbleConfig, landscape, sizes=None, check: bool = False) -> float:
    """J by sphere quadrature.  ``landscape=None`` means K = 1."""
    n = check_dimension(config.n, range(3, 5))
    Q, N = _integrals(config, landscape, sizes)
    J = Q / N ** ((n - 2) / n)
    if check:
        base = tuple(sizes or DEFAULT_GRIDS[n])
        finer = tuple(int(np.ceil(1.5 * s)) for s in base)
        Q2, N2 = _integrals(config, landscape, finer)
        J2 = Q2 / N2 ** ((n - 2) / n)
        if abs(J2 - J) > CONVERGENCE_RTOL * abs(J2):
            raise QuadratureNotConverged(f"J changed from {J:.12g} to {J2:.12g} on refinement")
        J = J2
    return float(J)


# -- leading-order quantities -------------------------------------------------

def k_at(landscape, x) -> float:
    if landscape is None:
        return 1.0
    if landscape.background_K is None:
        return landscape.k_local(x)[0]
    return landscape.k_global(x)[0]


def j_leading(config: BubbleConfig, landscape) -> float:
    """Leading-order J of well separated concentrated bubbles.

    With balanced weights alpha_i^{4/(n-2)} K(a_i) = const this equals
    S_n (sum_i K(a_i)^{-(n-2)/2})^{2/n}.
    """
    n = config.n
    a = config.weights
    K = np.array([k_at(landscape, b.center.coords) for b in config.bubbles])
    C = c0(n) ** critical_exponent(n) * c_tilde_2(n)
    Q = C * np.sum(a**2)
    N = C * np.sum(a ** critical_exponent(n) * K)
    return float(Q / N ** ((n - 2) / n))


def balanced_weights(config: BubbleConfig, landscape) -> np.ndarray:
    """alpha_i proportional to K(a_i)^{-(n-2)/4}, scaled so the leading ||u|| is 1."""
    n = config.n
    K = np.array([k_at(landscape, b.center.coords) for b in config.bubbles])
    alpha = K ** (-(n - 2) / 4)
    C = c0(n) ** critical_exponent(n) * c_tilde_2(n)
    return alpha / np.sqrt(C * np.sum(alpha**2))


def with_balanced_weights(config: BubbleConfig, landscape) -> BubbleConfig:
    alpha = balanced_weights(config, landscape)
    return BubbleConfig(config.n, [Bubble(b.center, b.concentration, float(w))
                                   for b, w in zip(config.bubbles, alpha)])


def is_admissible(config: BubbleConfig, landscape, eps: float = 0.1) -> bool:
    """Membership in the neighborhood V(p, eps) of bubble sums."""
    n = config.n
    if np.any(config.lambdas <= 1.0 / eps):
        return False
    K = np.array([k_at(landscape, b.center.coords) for b in config.bubbles])
    level = config.weights ** (4 / (n - 2)) * K
    for i in range(config.p):
        for j in range(config.p):
            if i == j:
                continue
            if abs(level[i] / level[j] - 1.0) >= eps:
                return False
            if interaction_epsilon(config.bubbles[i], config.bubbles[j], n) >= eps:
                return False
    return True


def self_coefficient(n: int, beta: float) -> float:
    """Constant of the self-interaction term in the lambda-derivative of J.

    With delta of flat scale lambda/2, int |x_k - y_k|^beta delta^{2n/(n-2)}
    = c0^{2n/(n-2)} 2^beta c_beta / lambda^beta, and differentiating the
    power -(n-2)/n of the denominator contributes beta/n.
    """
    return beta * 2.0**beta / n * c_beta(n, beta)


def _norm_factor(config: BubbleConfig) -> float:
    """c0^{2n/(n-2)} / ||u||^2 at leading order (equal to 1/(c_tilde_2 alpha^2) for p = 1)."""
    n = config.n
    a = config.weights
    total = c_tilde_2(n) * np.sum(a**2)
    for i in range(config.p):
        for j in range(config.p):
            if i != j:
                total += c_tilde_1(n) * a[i] * a[j] * interaction_epsilon(
                    config.bubbles[i], config.bubbles[j], n)
    return 1.0 / total


def _owner(landscape, x):
    owner = landscape.owner_of(x)
    if owner is None:
        raise OutsideBalls("bubble center lies outside every normal-coordinate ball")
    return owner


def grad_lambda_terms(config: BubbleConfig, landscape, i: int, j_value=None):
    """(prefactor, interaction bracket, self bracket) of the lambda-expansion.

    The expansion equals prefactor * (interaction - self) with
    prefactor = -2 J c0^{2n/(n-2)}/||u||^2.
    """
    n = config.n
    bi = config.bubbles[i]
    owner = _owner(landscape, bi.center.coords)
    pt = landscape.points[owner]
    K_a = landscape.k_local(bi.center.coords)[0]
    J = j_leading(config, landscape) if j_value is None else float(j_value)
    a = config.weights
    inter = 0.0
    for j, bj in enumerate(config.bubbles):
        if j != i:
            inter += a[i] * a[j] * dlog_eps_dlog_lambda(bi, bj, n)
    inter *= c_tilde_1(n)
    self_term = ((n - 2) / 2) * a[i] ** 2 * self_coefficient(n, pt.beta) / K_a \
        * pt.sum_b / bi.concentration**pt.beta
    return -2.0 * J * _norm_factor(config), inter, self_term


def grad_lambda_expansion(config: BubbleConfig, landscape, i: int, j_value=None) -> float:
    """Leading term of <dJ(u), alpha_i lambda_i d(delta_i)/d(lambda_i)> = lambda_i dJ/d(lambda_i)."""
    pref, inter, self_term = grad_lambda_terms(config, landscape, i, j_value)
    return pref * (inter - self_term)


_MOMENT_CACHE_SIZE = 4096


@functools.lru_cache(maxsize=_MOMENT_CACHE_SIZE)
def _moment_cached(n: int, beta: float, t: float) -> float:
    logA = ((n - 1) / 2) * np.log(np.pi) + gammaln((n + 3) / 2) - gammaln(n + 1)
    s = (n + 3) / 2

    def f(x):
        return x * abs(x + t) ** beta * (1.0 + x * x) ** (-s)

    lo, hi = min(0.0, -t), max(0.0, -t)
    total = 0.0
    for a, b in ((-np.inf, lo), (lo, hi), (hi, np.inf)):
        if a == b:
            continue
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-11, limit=200)
        total += val
    return float(np.exp(logA) * total)


def moment_integral(n: int, beta: float, t: float) -> float:
    """int_{R^n} x_k |x_k + t|^beta (1+|x|^2)^{-(n+1)} dx.

    The n-1 coordinates orthogonal to x_k are integrated out in closed form,
    leaving a 1-D adaptive quadrature.
    """
    if not beta < n + 1:
        raise ValueError("moment integral diverges")
    return _moment_cached(int(n), float(beta), float(t))


def grad_a_expansion(config: BubbleConfig, landscape, i: int, k: int, j_value=None,
                     m0: float = 10.0) -> float:
    """Leading term of <dJ(u), alpha_i (1/lambda_i) d(delta_i)/d(a_i)_k>.

    Inner regime (lambda |a - y| < m0) uses the moment integral, the outer one
    the pointwise gradient of K.  Both are (1/lambda) dJ/d(a_k), with a_k the
    k-th normal coordinate of the center in its owner's frame.
    """
    n = config.n
    bi = config.bubbles[i]
    owner = _owner(landscape, bi.center.coords)
    pt = landscape.points[owner]
    u = landscape.normal_coordinates(owner, bi.center.coords)
    K_a = landscape.k_local(bi.center.coords)[0]
    J = j_leading(config, landscape) if j_value is None else float(j_value)
    lam = bi.concentration
    alpha2 = config.weights[i] ** 2 * _norm_factor(config)
    beta, bk = pt.beta, pt.b[k]
    if lam * np.linalg.norm(u) < m0:
        mom = moment_integral(n, beta, lam * u[k] / 2.0)
        return -(n - 2) * alpha2 * (J / K_a) * bk * 2.0**beta / lam**beta * mom
    return -((n - 2) / n) * alpha2 * c_tilde_2(n) * (J / K_a) \
        * beta * bk * np.sign(u[k]) * abs(u[k]) ** (beta - 1) / lam


# -- coefficient block ----------------------------------------------------------

@dataclass
class LeadingCoefficients:
    names: tuple
    K_i: np.ndarray
    K_ij: np.ndarray


def leading_coefficients(landscape, names, normalization: str = "interaction") -> LeadingCoefficients:
    """K_i = c_i sum(b)/K^{n/2} and K_ij = c_tilde_1 2^{(n-2)/2} G/(K_i K_j)^{(n-2)/4}.

    ``normalization="interaction"`` uses c_i = c_beta(n, beta_i), the constant entering
    the interaction matrix; ``"bubble"`` uses :func:`self_coefficient`, which is
    the constant consistent with this package's bubbles and J.
    """
    from .conditions import resolve_points

    pts = resolve_points(landscape, names)
    n = landscape.n
    p = len(pts)
    K_i = np.empty(p)
    K_ij = np.zeros((p, p))
    coef = c_beta if normalization == "interaction" else self_coefficient
    if normalization not in ("interaction", "bubble"):
        raise ValueError(f"unknown normalization {normalization!r}")
    for i, y in enumerate(pts):
        K_i[i] = coef(n, y.beta) * y.sum_b / y.k_value ** (n / 2)
    pref = c_tilde_1(n) * 2.0 ** ((n - 2) / 2)
    for i in range(p):
        for j in range(i + 1, p):
            g = green_function(pts[i].position, pts[j].position, n)
            K_ij[i, j] = K_ij[j, i] = pref * g / (pts[i].k_value * pts[j].k_value) ** ((n - 2) / 4)
    return LeadingCoefficients(tuple(y.name for y in pts), K_i, K_ij)
