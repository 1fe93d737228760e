import math

import numpy as np
import pytest
from scipy import integrate

from conftest import axis, make_landscape, point
from nirenberg.constants import c_tilde_1, constants_table, radial_power_integral, sobolev_sn_closed_form, sphere_area
from nirenberg.conditions import build_matrix
from nirenberg.energy import (BubbleConfig, balanced_weights, grad_a_expansion, grad_lambda_expansion,
                              grad_lambda_terms, is_admissible, j_leading, j_numeric, leading_coefficients,
                              moment_integral, single_bubble_config, with_balanced_weights)
from nirenberg.errors import OutsideBalls, QuadratureNotConverged, UnsupportedDimension
from nirenberg.sphere import Bubble, SpherePoint, dlog_eps_dlog_lambda


def gm_landscape(n=3, beta=2.5, background=1.0):
    pts = [point("y1", axis(n, 0), beta, [-1.0] * n),
           point("y2", axis(n, 0, -1.0), beta, [1.0] * n, K=2.0),
           point("y3", axis(n, 1), 2.0, [-1.0, 2.0] + [-1.0] * (n - 2), K=0.5)]
    return make_landscape(n, pts, background_K=background)


def config_at(L, names, lams, offsets=None):
    centers = []
    for k, name in enumerate(names):
        u = np.zeros(L.n) if offsets is None else np.asarray(offsets[k])
        centers.append(L.from_normal(L.index_of(name), u))
    cfg = BubbleConfig(L.n, [Bubble(SpherePoint(c), lam) for c, lam in zip(centers, lams)])
    return with_balanced_weights(cfg, L)


@pytest.mark.parametrize("n", [3, 4])
def test_single_bubble_is_sobolev_constant(n):
    assert j_numeric(single_bubble_config(n), None) == pytest.approx(sobolev_sn_closed_form(n), rel=1e-4)


def test_unsupported_quadrature_dimension():
    with pytest.raises(UnsupportedDimension):
        j_numeric(single_bubble_config(5), None)


def test_refinement_check_detects_coarse_grid():
    cfg = single_bubble_config(3, lam=300.0)
    L = gm_landscape()
    cfg = config_at(L, ["y1"], [300.0])
    with pytest.raises(QuadratureNotConverged):
        j_numeric(cfg, L, sizes=(4, 2, 2), check=True)
    assert j_numeric(cfg, L, check=True) > 0


def test_concentrated_bubble_approaches_sobolev_constant():
    L = gm_landscape()
    gaps = []
    for lam in (1e3, 2e3, 4e3):
        J = j_numeric(config_at(L, ["y1"], [lam]), L)
        gaps.append(abs(J / sobolev_sn_closed_form(3) - 1))
    assert gaps[0] > gaps[1] > gaps[2]


def _rotation(rng, m):
    q, r = np.linalg.qr(rng.normal(size=(m, m)))
    return q * np.sign(np.diag(r))


def test_rotation_equivariance(rng):
    L = gm_landscape()
    cfg = config_at(L, ["y1", "y3"], [40.0, 60.0], offsets=[[0.01, 0, 0.005], [0, -0.01, 0]])
    R = _rotation(rng, 4)
    data = L.to_dict()
    for p, f in zip(data["critical_points"], L.frames):
        p["position"] = list(R @ np.asarray(p["position"]))
        p["frame"] = [list(R @ row) for row in f]
    L2 = type(L).from_dict(data)
    cfg2 = BubbleConfig(3, [Bubble(SpherePoint(R @ b.center.coords), b.concentration, b.weight)
                            for b in cfg.bubbles])
    assert j_numeric(cfg2, L2) == pytest.approx(j_numeric(cfg, L), rel=1e-6)


def test_separated_configurations_sanity_band():
    L = gm_landscape()
    cfg = config_at(L, ["y1", "y2", "y3"], [400.0, 500.0, 600.0])
    K = np.array([1.0, 2.0, 0.5])
    lead = sobolev_sn_closed_form(3) * np.sum(K ** -0.5) ** (2 / 3)
    assert j_numeric(cfg, L) > 0.8 * lead
    assert j_leading(cfg, L) == pytest.approx(lead, rel=1e-12)


def test_balanced_weights_and_admissibility():
    L = gm_landscape()
    cfg = config_at(L, ["y1", "y2"], [50.0, 80.0])
    level = cfg.weights ** 4 * np.array([1.0, 2.0])
    assert level[0] == pytest.approx(level[1])
    assert is_admissible(cfg, L, 0.1)
    assert not is_admissible(config_at(L, ["y1", "y2"], [5.0, 80.0]), L, 0.1)
    skew = BubbleConfig(3, [Bubble(b.center, b.concentration, 1.0) for b in cfg.bubbles])
    assert not is_admissible(skew, L, 0.1)


@pytest.mark.parametrize("n", [3, 4])
def test_lambda_gradient_signs_single_bubble(n):
    L = gm_landscape(n, beta=n - 0.5)
    for name in ("y1", "y2", "y3"):
        cfg = config_at(L, [name], [1e3])
        val = grad_lambda_expansion(cfg, L, 0)
        assert np.sign(val) == np.sign(L.point(name).sum_b)
        # reduces to a negative multiple of -K_i / lambda^beta: same sign as K_i
        K_i = leading_coefficients(L, [name]).K_i[0]
        assert np.sign(val) == np.sign(K_i)


def test_lambda_gradient_interaction_part():
    L = gm_landscape()
    cfg = config_at(L, ["y1", "y2"], [100.0, 150.0])
    pref, inter, _ = grad_lambda_terms(cfg, L, 0)
    a = cfg.weights
    expected = c_tilde_1(3) * a[0] * a[1] * dlog_eps_dlog_lambda(cfg.bubbles[0], cfg.bubbles[1], 3)
    assert inter == pytest.approx(expected, rel=1e-14)
    assert pref < 0


def test_lambda_gradient_outside_balls():
    L = gm_landscape()
    cfg = BubbleConfig(3, [Bubble(SpherePoint(axis(3, 2)), 100.0, 1.0)])
    with pytest.raises(OutsideBalls):
        grad_lambda_expansion(cfg, L, 0)


def _moment_oracle(n, beta, t):
    """Direct 2-D integral over (x_k, radius of the orthogonal coordinates)."""
    area = sphere_area(n - 2)

    def inner(x):
        f = lambda r: r ** (n - 2) * (1 + x * x + r * r) ** (-(n + 1))
        return integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-10, limit=200)[0]

    g = lambda x: x * abs(x + t) ** beta * inner(x)
    pts = sorted({0.0, -t})
    val = sum(integrate.quad(g, a, b, epsabs=0, epsrel=1e-10, limit=200)[0]
              for a, b in [(-np.inf, pts[0])] + list(zip(pts, pts[1:])) + [(pts[-1], np.inf)] if a != b)
    return area * val


@pytest.mark.parametrize("n,beta,t", [(3, 2.0, 0.3), (3, 2.5, -1.2), (4, 1.5, 2.0), (4, 3.0, 0.05)])
def test_moment_integral_vs_direct(n, beta, t):
    assert moment_integral(n, beta, t) == pytest.approx(_moment_oracle(n, beta, t), rel=1e-7)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_moment_integral_beta2_closed_form(n):
    t = 0.7
    exact = 2 * t / n * (radial_power_integral(n, n) - radial_power_integral(n, n + 1))
    assert moment_integral(n, 2.0, t) == pytest.approx(exact, rel=1e-9)
    assert moment_integral(n, 2.5, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_grad_a_examples():
    L = gm_landscape()
    centered = config_at(L, ["y3"], [200.0])
    assert all(grad_a_expansion(centered, L, 0, k) == pytest.approx(0.0, abs=1e-15) for k in range(3))
    # inner regime, beta = 2 at y3: sign opposite to b_k * offset
    lam = 200.0
    for k, s in [(0, 1.0), (1, 1.0), (1, -1.0)]:
        u = np.zeros(3)
        u[k] = s * 2.0 / lam
        cfg = config_at(L, ["y3"], [lam], offsets=[u])
        assert np.sign(grad_a_expansion(cfg, L, 0, k)) == -np.sign(L.point("y3").b[k] * s)
    # outer regime, b_k < 0 and positive offset: positive value
    u = np.array([0.05, 0.0, 0.0])
    cfg = config_at(L, ["y1"], [1e3], offsets=[u])
    assert grad_a_expansion(cfg, L, 0, 0) > 0


def test_leading_coefficients_identities():
    L = gm_landscape(4, beta=2.0)
    names = ["y1", "y2", "y3"]
    c = leading_coefficients(L, names)
    assert np.allclose(c.K_ij, c.K_ij.T)
    assert np.all(c.K_ij[~np.eye(3, dtype=bool)] > 0)
    assert np.all(np.sign(c.K_i) == [np.sign(L.point(m).sum_b) for m in names])
    M = build_matrix(L, names).entries
    assert np.allclose(np.diag(M), -c.K_i, atol=1e-12, rtol=0)
    off = ~np.eye(3, dtype=bool)
    assert np.allclose(M[off], -c.K_ij[off], atol=1e-12, rtol=0)
    data = L.to_dict()
    for p in data["critical_points"]:
        p["K"] *= 2.0
    c2 = leading_coefficients(type(L).from_dict(data), names)
    assert np.allclose(c2.K_i, c.K_i * 2.0 ** (-4 / 2), rtol=1e-12)
    assert np.allclose(c2.K_ij, c.K_ij * 2.0 ** (-(4 - 2) / 2), rtol=1e-12)
