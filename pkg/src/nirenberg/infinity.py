"""Collections of subsets of Gamma- carrying critical points at infinity."""
from __future__ import annotations

from dataclasses import dataclass

from .conditions import (INDETERMINATE, SUBSET_CAP, YES, build_matrix, eigen_verdict, is_balanced,
                         pair_sign)
from .errors import CapExceeded, IndeterminateEigenvalue


@dataclass(frozen=True)
class InfinityClass:
    members: tuple
    index_at_infinity: int
    collection: str = "lambda_tilde"

    @property
    def p(self) -> int:
        return len(self.members)

    def as_dict(self):
        return {"members": list(self.members), "index": self.index_at_infinity,
                "collection": self.collection}


def index_at_infinity(landscape, members) -> int:
    n = landscape.n
    return len(members) - 1 + sum(n - landscape.point(m).index for m in members)


def _gamma_minus_names(landscape):
    names = sorted(p.name for p in landscape.gamma_minus)
    if len(names) > SUBSET_CAP:
        raise CapExceeded(f"Gamma- has {len(names)} points, above the cap of {SUBSET_CAP}")
    return names


def _cliques(names, compatible):
    """All subsets of size >= 2 in which every pair is compatible, sorted."""
    out = []

    def extend(current, candidates):
        for k, v in enumerate(candidates):
            group = current + (v,)
            if len(group) >= 2:
                out.append(group)
            extend(group, [w for w in candidates[k + 1:] if compatible(v, w)])

    extend((), list(names))
    return sorted(out)


def _sign_table(landscape, names):
    n = landscape.n
    beta = {m: landscape.point(m).beta for m in names}
    return {(a, b): pair_sign(n, beta[a], beta[b]) for a in names for b in names if a != b}


def enumerate_lambda_minus(landscape):
    names = _gamma_minus_names(landscape)
    sign = _sign_table(landscape, names)
    return [InfinityClass(A, index_at_infinity(landscape, A), "lambda")
            for A in _cliques(names, lambda a, b: sign[a, b] > 0)]


def equality_vertices(landscape, members):
    sign = _sign_table(landscape, members)
    return tuple(a for a in members if any(sign[a, b] == 0 for b in members if b != a))


def lambda_tilde_partition(landscape):
    """(classes in the relaxed collection, subsets whose membership is undecided)."""
    n = landscape.n
    names = _gamma_minus_names(landscape)
    sign = _sign_table(landscape, names)
    decided, undecided = [], []
    for A in _cliques(names, lambda a, b: sign[a, b] >= 0):
        E = equality_vertices(landscape, A)
        if E:
            if not all(is_balanced(landscape.point(m).beta, n) for m in E):
                continue
            rho, state = eigen_verdict(build_matrix(landscape, E))
            if state == INDETERMINATE:
                undecided.append(A)
                continue
            if not (state == YES and rho > 0):
                continue
        decided.append(InfinityClass(A, index_at_infinity(landscape, A), "lambda_tilde"))
    return decided, undecided


def enumerate_lambda_tilde_minus(landscape):
    decided, undecided = lambda_tilde_partition(landscape)
    if undecided:
        raise IndeterminateEigenvalue(
            f"{len(undecided)} subset(s) have a least eigenvalue inside the zero band",
            decided, undecided)
    return decided


def catalog_critical_points_at_infinity(landscape):
    """Singletons of Gamma- (index n - i(y)) followed by the relaxed collection."""
    singles = [InfinityClass((name,), index_at_infinity(landscape, (name,)), "singleton")
               for name in _gamma_minus_names(landscape)]
    return singles + enumerate_lambda_tilde_minus(landscape)
