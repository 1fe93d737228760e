import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import axis, make_landscape, point
from nirenberg.conditions import YES, check_A2
from nirenberg.degree import (class_term, compute_degree, euler_identity_check, parity_sign,
                              reduced_degree_formula, singleton_term)
from nirenberg.errors import PreconditionFailed
from nirenberg.infinity import catalog_critical_points_at_infinity


def b_with_index(n, i):
    return [-1.0] * i + [0.5] * (n - i) if i > n / 2 else [-0.5] * i + [1.0] * (n - i)


def test_empty_gamma_minus():
    L = make_landscape(3, [point("y", axis(3, 0), 2.5, [1, 1, 1])])
    assert compute_degree(L).d == -1
    assert compute_degree(make_landscape(4, [])).d == -1
    assert reduced_degree_formula(L) == -1


def test_two_point_n3():
    L = make_landscape(3, [point("y1", axis(3, 0), 2.5, [-1, -1, -1]), point("y2", axis(3, 1), 2.5, [-1, -1, 1])])
    assert compute_degree(L).d == -(1 + (-1) ** 7 + (-1) ** 6)


def test_pair_n4():
    L = make_landscape(4, [point("y1", axis(4, 0), 1.5, [-1] * 4), point("y2", axis(4, 1), 1.5, [-1, -1, -1, 1])])
    rep = compute_degree(L)
    assert rep.d == -(1 + (-1) ** 9 + (-1) ** 8 + (-1) ** (10 + 7)) == 0
    assert rep.existence_flag is False and rep.multiplicity_lower_bound == 0
    assert compute_degree(L, "lambda").d == 0
    assert euler_identity_check(L, []) == 0
    assert euler_identity_check(L, [2]) == -1


def test_reduced_formula_example_and_precondition():
    L = make_landscape(4, [point("y1", axis(4, 0), 3.0, [-1] * 4), point("y2", axis(4, 1), 3.0, [-1, -1, -1, 1])])
    assert reduced_degree_formula(L) == -1 + (-1) ** 8 + (-1) ** 7
    L = make_landscape(4, [point("y1", axis(4, 0), 2.0, [-1] * 4)])
    with pytest.raises(PreconditionFailed):
        reduced_degree_formula(L)


def random_landscape(rng, n, count, lo, hi):
    slots = [axis(n, k // 2, 1.0 if k % 2 == 0 else -1.0) for k in range(2 * (n + 1))]
    pts = []
    for k in range(count):
        i = int(rng.integers(0, n + 1))
        b = np.array(b_with_index(n, i))
        if rng.random() < 0.5:
            b = -b
        if b.sum() == 0:
            b[0] *= 1.5
        pts.append(point(f"y{k}", slots[k], float(rng.uniform(lo, hi)), b))
    return make_landscape(n, pts)


def test_reduced_formula_matches_compute_degree(rng):
    for _ in range(50):
        n = int(rng.integers(3, 9))
        L = random_landscape(rng, n, int(rng.integers(0, 2 * n + 2)), n - 2 + 1e-6, n - 1e-6)
        assert reduced_degree_formula(L) == compute_degree(L).d


@pytest.mark.parametrize("n", range(3, 9))
def test_parity_identity(n):
    for p in range(1, 7):
        for idx in itertools.combinations_with_replacement(range(n + 1), p):
            lhs = parity_sign(p * (n + 1) + sum(idx))
            rhs = -parity_sign(p - 1 + sum(n - i for i in idx))
            assert lhs == rhs


def test_terms_are_integers():
    assert singleton_term(4, 3) == 1 and isinstance(singleton_term(4, 3), int)
    assert class_term(4, [4, 3]) == -1


def test_euler_identity_against_degree(rng):
    # residual(indices) = 0 exactly when sum (-1)^{i(w)} = -d
    for _ in range(100):
        n = int(rng.integers(3, 7))
        L = random_landscape(rng, n, int(rng.integers(0, 5)), 1.05, n - 0.05)
        rep = compute_degree(L)
        if rep.d is None:
            continue
        base = euler_identity_check(L, [])
        for indices in ([], [0], [1], [0, 2], [1, 3, 5], [0, 0, 1]):
            s = sum(parity_sign(i) for i in indices)
            assert euler_identity_check(L, indices) == base - s
            assert (euler_identity_check(L, indices) == 0) == (s == -rep.d)


def test_collections_agree_under_A2(rng):
    for _ in range(50):
        n = int(rng.integers(4, 7))
        L = random_landscape(rng, n, int(rng.integers(2, 6)), 1.05, n - 0.05)
        if check_A2(L).holds == YES:
            assert compute_degree(L, "lambda").d == compute_degree(L, "lambda_tilde").d


def test_name_permutation_invariance(rng):
    for _ in range(20):
        L = random_landscape(rng, 4, 4, 1.2, 2.5)
        data = L.to_dict()
        names = [p["name"] for p in data["critical_points"]]
        perm = rng.permutation(len(names))
        for p, k in zip(data["critical_points"], perm):
            p["name"] = f"w{k}"
        assert compute_degree(type(L).from_dict(data)).d == compute_degree(L).d


def test_report_fields():
    L = make_landscape(3, [point("y1", axis(3, 0), 2.5, [-1, -1, -1]), point("y2", axis(3, 1), 2.5, [-1, -1, 1])])
    rep = compute_degree(L)
    assert rep.existence_flag and rep.multiplicity_lower_bound == abs(rep.d) == 1
    assert rep.hypothesis_verdicts == {"A1": "yes", "A2": "yes", "H1": "yes", "H2": "yes"}
    d = rep.as_dict()
    assert d["collection_used"] == "lambda_tilde" and d["d"] == -1


def test_indeterminate_interval():
    from scipy.optimize import brentq
    from nirenberg.conditions import build_matrix, least_eigenvalue

    def land(scale):
        return make_landscape(4, [point("y1", axis(4, 0), 2.0, [-2.0] * 4, K=scale),
                                  point("y2", axis(4, 1), 2.0, [-2.0] * 4)])

    root = brentq(lambda s: least_eigenvalue(build_matrix(land(s), ["y1", "y2"])), 0.2, 0.5, xtol=1e-15)
    rep = compute_degree(land(root * (1 + 1e-13)))
    assert rep.d is None
    # singletons give (-1)^{5+4} each; the undecided pair adds (-1)^{10+8} or nothing
    assert (rep.d_min, rep.d_max) == (-(1 - 2 + 1), -(1 - 2)) == (0, 1)
    assert rep.hypothesis_verdicts["H1"] == "indeterminate"
    assert not rep.existence_flag
