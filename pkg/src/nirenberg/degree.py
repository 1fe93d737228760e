"""The degree counting formula and the Euler-Poincare consistency identity.

    d = -[1 + sum_{y in Gamma-} (-1)^{n+1+i(y)}
            + sum_{A in collection} (-1)^{p(n+1) + sum_j i(y_j)}]

All signs are computed from integer parities.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .conditions import BETA_TOL, YES, check_all
from .errors import IndeterminateHypothesis, PreconditionFailed
from .infinity import enumerate_lambda_minus, index_at_infinity, lambda_tilde_partition

RESOLUTION_CAP_LOG2 = 10
COLLECTIONS = ("lambda", "lambda_tilde")
REQUIRED = {"lambda": ("A1", "A2"), "lambda_tilde": ("H1", "H2")}


def parity_sign(k: int) -> int:
    return 1 if k % 2 == 0 else -1


def singleton_term(n: int, i: int) -> int:
    return parity_sign(n + 1 + i)


def class_term(n: int, indices) -> int:
    return parity_sign(len(indices) * (n + 1) + sum(indices))


@dataclass
class DegreeReport:
    d: int | None
    d_min: int
    d_max: int
    collection_used: str
    hypothesis_verdicts: dict
    existence_flag: bool
    multiplicity_lower_bound: int
    undecided: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {"d": self.d, "d_min": self.d_min, "d_max": self.d_max,
                "collection_used": self.collection_used,
                "hypothesis_verdicts": dict(sorted(self.hypothesis_verdicts.items())),
                "existence_flag": self.existence_flag,
                "multiplicity_lower_bound": self.multiplicity_lower_bound,
                "undecided": [list(a) for a in self.undecided], "notes": self.notes}


def _indices(landscape, members):
    return [landscape.point(m).index for m in members]


def compute_degree(landscape, collection: str = "lambda_tilde", verdicts=None) -> DegreeReport:
    collection = collection.replace("-", "_")
    if collection not in COLLECTIONS:
        raise ValueError(f"collection must be one of {COLLECTIONS}")
    n = landscape.n
    base = 1 + sum(singleton_term(n, p.index) for p in landscape.gamma_minus)
    if collection == "lambda":
        classes, undecided = enumerate_lambda_minus(landscape), []
    else:
        classes, undecided = lambda_tilde_partition(landscape)
    base += sum(class_term(n, _indices(landscape, c.members)) for c in classes)
    if len(undecided) > RESOLUTION_CAP_LOG2:
        raise IndeterminateHypothesis(
            f"{len(undecided)} undecided subsets exceed the cap of 2^{RESOLUTION_CAP_LOG2} resolutions")
    optional = [class_term(n, _indices(landscape, A)) for A in undecided]
    values = sorted({-(base + sum(t for t, keep in zip(optional, choice) if keep))
                     for choice in itertools.product((False, True), repeat=len(optional))})
    d_min, d_max = values[0], values[-1]
    d = d_min if d_min == d_max else None
    if verdicts is None:
        verdicts = check_all(landscape)
    states = {name: v.holds for name, v in verdicts.items()}
    hypotheses_hold = all(states.get(name) == YES for name in REQUIRED[collection])
    existence = d is not None and d != 0 and hypotheses_hold
    multiplicity = min(abs(v) for v in values) if hypotheses_hold else 0
    notes = ["the formula holds for radii beyond an a-priori bound that is not computable here"]
    return DegreeReport(d, d_min, d_max, collection, states, existence, multiplicity,
                        list(undecided), notes)


def reduced_degree_formula(landscape) -> int:
    """d = -1 + sum_{Gamma-} (-1)^{n+i(y)}, valid when every beta lies in (n-2, n)."""
    n = landscape.n
    for p in landscape.points:
        if not (n - 2 + BETA_TOL < p.beta < n):
            raise PreconditionFailed(f"beta({p.name}) = {p.beta} is not in (n-2, n)")
    return -1 + sum(parity_sign(n + p.index) for p in landscape.gamma_minus)


remark2_reduction = reduced_degree_formula


def euler_identity_check(landscape, interior_indices, collection: str = "lambda_tilde") -> int:
    """1 - [sum (-1)^{n-i} + sum_A (-1)^{p-1+sum(n-i)} + sum_w (-1)^{i(w)}]."""
    n = landscape.n
    total = sum(parity_sign(n - p.index) for p in landscape.gamma_minus)
    if collection.replace("-", "_") == "lambda":
        classes = enumerate_lambda_minus(landscape)
    else:
        classes, undecided = lambda_tilde_partition(landscape)
        if undecided:
            raise IndeterminateHypothesis("relaxed collection has undecided members")
    total += sum(parity_sign(index_at_infinity(landscape, c.members)) for c in classes)
    total += sum(parity_sign(int(i)) for i in interior_indices)
    return 1 - total
