import itertools
import math

import numpy as np
import pytest

from conftest import axis, make_landscape, point
from nirenberg.conditions import YES, build_matrix, check_A2, least_eigenvalue, pair_sign
from nirenberg.errors import CapExceeded, IndeterminateEigenvalue
from nirenberg.infinity import (catalog_critical_points_at_infinity, enumerate_lambda_minus,
                                enumerate_lambda_tilde_minus, equality_vertices, lambda_tilde_partition)


def random_landscape(rng, n, count, beta_choices=None):
    pts = []
    slots = [axis(n, k // 2, 1.0 if k % 2 == 0 else -1.0) for k in range(2 * (n + 1))]
    for k in range(count):
        beta = rng.choice(beta_choices) if beta_choices else rng.uniform(1.05, n - 0.05)
        b = rng.uniform(0.2, 2.0, n) * rng.choice([-1, 1], n)
        if rng.random() < 0.7:
            b = -np.abs(b)
            b[0] = abs(b[0]) * 0.1
        pts.append(point(f"y{k}", slots[k], float(beta), b, K=rng.uniform(0.5, 2.0)))
    return make_landscape(n, pts)


def test_n3_collections_always_empty(rng):
    for _ in range(100):
        L = random_landscape(rng, 3, int(rng.integers(1, 8)))
        assert enumerate_lambda_minus(L) == []
        assert enumerate_lambda_tilde_minus(L) == []


def test_examples_n4():
    L = make_landscape(4, [point("y1", axis(4, 0), 1.5, [-1] * 4), point("y2", axis(4, 1), 1.5, [-1, -1, -1, 1])])
    assert [c.members for c in enumerate_lambda_minus(L)] == [("y1", "y2")]
    cat = catalog_critical_points_at_infinity(L)
    assert [(c.members, c.index_at_infinity) for c in cat] == [(("y1",), 0), (("y2",), 1), (("y1", "y2"), 2)]
    assert len(cat) == len(L.gamma_minus) + len(enumerate_lambda_tilde_minus(L))

    L = make_landscape(4, [point("y1", axis(4, 0), 2.0, [-3] * 4), point("y2", axis(4, 0, -1.0), 2.0, [-3] * 4)])
    assert enumerate_lambda_minus(L) == []
    rho = least_eigenvalue(build_matrix(L, ["y1", "y2"]))
    M = build_matrix(L, ["y1", "y2"]).entries
    oracle = (M[0, 0] + M[1, 1]) / 2 - math.sqrt(((M[0, 0] - M[1, 1]) / 2) ** 2 + M[0, 1] ** 2)
    assert rho == pytest.approx(oracle) and rho > 0
    assert [c.members for c in enumerate_lambda_tilde_minus(L)] == [("y1", "y2")]

    L = make_landscape(4, [point("y1", axis(4, 0), 1.5, [-1] * 4), point("y2", axis(4, 1), 3.0, [-1] * 4)])
    assert enumerate_lambda_tilde_minus(L) == []


def test_negative_eigenvalue_excluded():
    L = make_landscape(4, [point("y1", axis(4, 0), 2.0, [-0.1] * 4), point("y2", axis(4, 1), 2.0, [-0.1] * 4)])
    assert least_eigenvalue(build_matrix(L, ["y1", "y2"])) < 0
    assert enumerate_lambda_tilde_minus(L) == []


def test_single_gamma_minus_point():
    L = make_landscape(3, [point("y", axis(3, 0), 2.0, [-1] * 3)])
    cat = catalog_critical_points_at_infinity(L)
    assert len(cat) == 1 and cat[0].index_at_infinity == 0 and cat[0].p == 1


def test_collection_laws(rng):
    for _ in range(100):
        n = int(rng.integers(4, 7))
        choices = [n - 2.0, 1.5, 2.5, (n - 2) / 2 + 0.5, n - 1.0]
        L = random_landscape(rng, n, int(rng.integers(2, 7)), beta_choices=[b for b in choices if 1 < b < n])
        strict = [c.members for c in enumerate_lambda_minus(L)]
        decided, undecided = lambda_tilde_partition(L)
        relaxed = [c.members for c in decided]
        assert set(strict) <= set(relaxed)
        if check_A2(L).holds == YES:
            assert strict == relaxed
        assert strict == sorted(strict) and relaxed == sorted(relaxed)
        gm = {p.name for p in L.gamma_minus}
        for A in relaxed:
            assert len(A) >= 2 and set(A) <= gm
            for a, b in itertools.combinations(A, 2):
                assert pair_sign(n, L.point(a).beta, L.point(b).beta) >= 0
        for A in strict:
            for a, b in itertools.combinations(A, 2):
                assert pair_sign(n, L.point(a).beta, L.point(b).beta) > 0


def test_equality_vertices():
    L = make_landscape(4, [point("a", axis(4, 0), 2.0, [-1] * 4), point("b", axis(4, 1), 2.0, [-1] * 4),
                           point("c", axis(4, 2), 1.5, [-1] * 4)])
    assert equality_vertices(L, ("a", "b", "c")) == ("a", "b")


def test_indeterminate_membership_is_reported():
    from scipy.optimize import brentq

    def land(scale):
        return make_landscape(4, [point("y1", axis(4, 0), 2.0, [-2.0] * 4, K=scale),
                                  point("y2", axis(4, 1), 2.0, [-2.0] * 4)])

    root = brentq(lambda s: least_eigenvalue(build_matrix(land(s), ["y1", "y2"])), 0.2, 0.5, xtol=1e-15)
    L = land(root * (1 + 1e-13))
    with pytest.raises(IndeterminateEigenvalue) as info:
        enumerate_lambda_tilde_minus(L)
    assert info.value.undecided == [("y1", "y2")]


def test_cap():
    pts = [point(f"y{k:02d}", [math.cos(0.2 * k), math.sin(0.2 * k), 0, 0], 2.0, [-1] * 3) for k in range(21)]
    L = make_landscape(3, pts, rho0=0.01)
    with pytest.raises(CapExceeded):
        enumerate_lambda_minus(L)
