"""Universal constants attached to the bubble on R^n and on S^n.

    c_tilde_1(n) = int_{R^n} (1+|x|^2)^{-(n+2)/2} dx
    c_tilde_2(n) = int_{R^n} (1+|x|^2)^{-n} dx
    c_beta(n, b) = int_{R^n} |x_1|^b (1+|x|^2)^{-n} dx

Each is available in closed form (Gamma functions) and by quadrature.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.special import gamma, gammaln
from scipy.stats import qmc

from .errors import DivergentIntegral, UnsupportedDimension

DIMENSIONS = range(3, 9)
BETA_KEY_RESOLUTION = 1e-9


def check_dimension(n: int, allowed=DIMENSIONS) -> int:
    if int(n) != n or int(n) not in allowed:
        raise UnsupportedDimension(f"dimension n={n} not in {allowed.start}..{allowed.stop - 1}")
    return int(n)


def sphere_area(m: int) -> float:
    """Area of the unit sphere S^m in R^{m+1}."""
    return 2.0 * np.pi ** ((m + 1) / 2) / gamma((m + 1) / 2)


def radial_power_integral(n: int, s: float) -> float:
    """int_{R^n} (1+|x|^2)^{-s} dx = pi^{n/2} Gamma(s - n/2) / Gamma(s)."""
    if s <= n / 2:
        raise DivergentIntegral(f"(1+|x|^2)^-{s} is not integrable on R^{n}")
    return float(np.exp((n / 2) * np.log(np.pi) + gammaln(s - n / 2) - gammaln(s)))


def radial_power_quadrature(n: int, s: float) -> float:
    """Same integral by adaptive Gauss-Kronrod on the radial profile."""
    val, _ = integrate.quad(lambda r: r ** (n - 1) * (1.0 + r * r) ** (-s), 0.0, np.inf,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return sphere_area(n - 1) * val


def c_tilde_1(n: int) -> float:
    n = check_dimension(n)
    return radial_power_integral(n, (n + 2) / 2)


def c_tilde_2(n: int) -> float:
    n = check_dimension(n)
    return radial_power_integral(n, n)


def _check_beta(n, beta):
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be a finite nonnegative number, got {beta}")
    if beta >= n:
        raise DivergentIntegral(f"|x_1|^beta (1+|x|^2)^-n diverges for beta={beta} >= n={n}")


def angular_moment(n: int, beta: float) -> float:
    """int_{S^{n-1}} |w_1|^beta dw."""
    return 2.0 * np.pi ** ((n - 1) / 2) * gamma((beta + 1) / 2) / gamma((n + beta) / 2)


def radial_moment(n: int, beta: float) -> float:
    """int_0^inf r^{n-1+beta} (1+r^2)^{-n} dr = B((n+beta)/2, (n-beta)/2) / 2."""
    a, b = (n + beta) / 2, (n - beta) / 2
    return 0.5 * float(np.exp(gammaln(a) + gammaln(b) - gammaln(a + b)))


@functools.lru_cache(maxsize=None)
def _c_beta_cached(n: int, key: int) -> float:
    beta = key * BETA_KEY_RESOLUTION
    return angular_moment(n, beta) * radial_moment(n, beta)


def c_beta(n: int, beta: float) -> float:
    n = check_dimension(n)
    beta = float(beta)
    _check_beta(n, beta)
    key = int(round(beta / BETA_KEY_RESOLUTION))
    if key * BETA_KEY_RESOLUTION >= n:
        raise DivergentIntegral(f"beta={beta} rounds onto the divergence at n={n}")
    return _c_beta_cached(n, key)


def c_beta_quadrature(n: int, beta: float) -> float:
    """Angular and radial factors each by 1-D adaptive quadrature."""
    n = check_dimension(n)
    _check_beta(n, beta)
    ang, _ = integrate.quad(lambda t: np.abs(np.cos(t)) ** beta * np.sin(t) ** (n - 2),
                            0.0, np.pi, points=[np.pi / 2], epsabs=0.0, epsrel=1e-13, limit=200)
    ang *= sphere_area(n - 2)
    # r^2 = s/(1-s) then 1-s = v^k turns the Beta-type radial integrand into a bounded one
    k = 2.0 / (n - beta)
    a = (n + beta) / 2

    def radial(v):
        s = 1.0 - v**k
        return 0.5 * k * s ** (a - 1)

    rad, _ = integrate.quad(radial, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return ang * rad


def c_beta_qmc(n: int, beta: float, log2_points: int = 18, seed: int = 0) -> float:
    """Scrambled Sobol estimate of c_beta over R^n in polar coordinates.

    The first cube coordinate drives the radius through the same desingularizing
    map as in :func:`c_beta_quadrature`, the second the polar angle from the x_1
    axis; the remaining angles carry a constant integrand.
    """
    n = check_dimension(n)
    _check_beta(n, beta)
    U = qmc.Sobol(n, scramble=True, seed=seed).random_base2(log2_points)
    k = 2.0 / (n - beta)
    s = 1.0 - U[:, 0] ** k
    radial = 0.5 * k * s ** ((n + beta) / 2 - 1)
    psi = np.pi * U[:, 1]
    polar = np.pi * np.abs(np.cos(psi)) ** beta * np.sin(psi) ** (n - 2)
    return float(np.mean(radial * polar) * sphere_area(n - 2))


# -- bubble normalization -----------------------------------------------------

def yamabe_relative_residual(n: int, lam: float, cos_d, c: float):
    """(-L delta - delta^{(n+2)/(n-2)}) / delta^{(n+2)/(n-2)} for the radial bubble.

    Uses the exact Laplace-Beltrami of a zonal function F(cos d):
    Lap F = (1 - t^2) F'' - n t F'.
    """
    t = np.asarray(cos_d, dtype=float)
    m = (n - 2) / 2
    D = lam * lam + 1.0 + (1.0 - lam * lam) * t
    q = (1.0 - lam * lam) / D
    F = c * (lam / D) ** m
    dF = -m * F * q
    d2F = m * (m + 1) * F * q * q
    lap = (1.0 - t * t) * d2F - n * t * dF
    minus_L = -(4 * (n - 1) / (n - 2)) * lap + n * (n - 1) * F
    power = F ** ((n + 2) / (n - 2))
    return (minus_L - power) / power


def fit_c0(n: int, lam: float = 1.0) -> float:
    """Root-solve the Yamabe residual at the bubble center for the amplitude."""
    n = check_dimension(n)
    return float(np.exp(optimize.brentq(
        lambda logc: yamabe_relative_residual(n, lam, 1.0, np.exp(logc)),
        -10.0, 10.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)))


@functools.lru_cache(maxsize=None)
def c0(n: int) -> float:
    return fit_c0(n, 1.0)


def c0_closed_form(n: int) -> float:
    return (4.0 * n * (n - 1)) ** ((n - 2) / 4)


def sobolev_sn(n: int, **quadrature) -> float:
    """J at a single bubble with K = 1, evaluated by sphere quadrature (n = 3, 4)."""
    n = check_dimension(n, range(3, 5))
    from .energy import single_bubble_config, j_numeric

    return j_numeric(single_bubble_config(n), None, **quadrature)


def sobolev_sn_closed_form(n: int) -> float:
    return n * (n - 1) * sphere_area(n) ** (2.0 / n)


@dataclass
class ConstantsTable:
    n: int
    c_tilde_1: float
    c_tilde_2: float
    c0: float
    sobolev_sn: float | None
    c_beta_cache: dict = field(default_factory=dict)

    def c_beta(self, beta: float) -> float:
        key = round(float(beta) / BETA_KEY_RESOLUTION) * BETA_KEY_RESOLUTION
        if key not in self.c_beta_cache:
            self.c_beta_cache[key] = c_beta(self.n, beta)
        return self.c_beta_cache[key]

    def as_dict(self) -> dict:
        out = {"n": self.n, "c_tilde_1": self.c_tilde_1, "c_tilde_2": self.c_tilde_2,
               "c0": self.c0, "sobolev_sn": self.sobolev_sn}
        for key, value in sorted(self.c_beta_cache.items()):
            out[f"c_beta({key:.9g})"] = value
        return out


@functools.lru_cache(maxsize=None)
def constants_table(n: int) -> ConstantsTable:
    n = check_dimension(n)
    sn = sobolev_sn(n) if n <= 4 else None
    return ConstantsTable(n=n, c_tilde_1=c_tilde_1(n), c_tilde_2=c_tilde_2(n), c0=c0(n),
                          sobolev_sn=sn)
