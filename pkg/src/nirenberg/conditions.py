"""Hypotheses A1, A2, H1, H2 on a landscape.

Verdicts are tri-state.  Equalities between flatness expressions are decided at
``BETA_TOL``; eigenvalues and rho-tilde are compared against a zero band, and a
value inside the band is reported as indeterminate rather than guessed.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .constants import c_beta, c_tilde_1
from .errors import BetaTooSmall, CapExceeded, DuplicatePoint, NotInBj0, UnknownName
from .sphere import green_function

BETA_TOL = 1e-12
EIG_BAND = 1e-9
RHO_TILDE_BAND = 1e-9
SUBSET_CAP = 20

YES, NO, INDETERMINATE = "yes", "no", "indeterminate"


def resolve_points(landscape, names):
    names = tuple(names)
    if len(set(names)) != len(names):
        raise DuplicatePoint(f"repeated names in {names}")
    pts = []
    for name in names:
        try:
            pts.append(landscape.point(name))
        except (KeyError, UnknownName):
            raise UnknownName(f"no critical point named {name!r}") from None
    return pts


def beta_star(beta: float, n: int) -> float:
    return min(beta, n)


def pair_expression(n: int, beta_i: float, beta_j: float) -> float:
    """1/beta*_i + 1/beta*_j - 2/(n-2)."""
    return 1.0 / beta_star(beta_i, n) + 1.0 / beta_star(beta_j, n) - 2.0 / (n - 2)


def pair_sign(n: int, beta_i: float, beta_j: float) -> int:
    e = pair_expression(n, beta_i, beta_j)
    if abs(e) <= BETA_TOL:
        return 0
    return 1 if e > 0 else -1


def is_balanced(beta: float, n: int) -> bool:
    return abs(beta - (n - 2)) <= BETA_TOL


@dataclass
class InteractionMatrix:
    points: tuple
    entries: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))


def build_matrix(landscape, names) -> InteractionMatrix:
    from .energy import leading_coefficients

    coeffs = leading_coefficients(landscape, names)
    M = -coeffs.K_ij.copy()
    M[np.diag_indices_from(M)] = -coeffs.K_i
    return InteractionMatrix(coeffs.names, M)


def least_eigenvalue(M) -> float:
    entries = M.entries if isinstance(M, InteractionMatrix) else np.asarray(M, dtype=float)
    return float(np.linalg.eigvalsh(entries)[0])


def zero_test(value: float, band: float) -> str:
    """YES when |value| clears the band, NO for an exact zero, else INDETERMINATE."""
    if value == 0.0:
        return NO
    return YES if abs(value) > band else INDETERMINATE


def eigen_verdict(M: InteractionMatrix):
    rho = least_eigenvalue(M)
    return rho, zero_test(rho, EIG_BAND * M.norm)


@dataclass
class ConditionVerdict:
    condition: str
    holds: str
    witnesses: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def as_dict(self):
        out = {"holds": self.holds, "witnesses": self.witnesses}
        if self.notes:
            out["notes"] = self.notes
        return out


def _combine(states):
    if NO in states:
        return NO
    if INDETERMINATE in states:
        return INDETERMINATE
    return YES


def nonempty_subsets(names, cap=SUBSET_CAP, what="set"):
    names = sorted(names)
    if len(names) > cap:
        raise CapExceeded(f"{what} has {len(names)} members, above the cap of {cap}")
    for size in range(1, len(names) + 1):
        yield from itertools.combinations(names, size)


def check_A1(landscape) -> ConditionVerdict:
    n = landscape.n
    bound = (n - 2) / 2
    bad = [{"members": [p.name], "value": p.beta}
           for p in landscape.points if not p.beta > bound + BETA_TOL]
    return ConditionVerdict("A1", NO if bad else YES, bad)


def check_A2(landscape) -> ConditionVerdict:
    n = landscape.n
    gm = sorted(landscape.gamma_minus, key=lambda p: p.name)
    bad = []
    for p, q in itertools.combinations(gm, 2):
        e = pair_expression(n, p.beta, q.beta)
        if abs(e) <= BETA_TOL:
            bad.append({"members": [p.name, q.name], "value": e})
    return ConditionVerdict("A2", NO if bad else YES, bad)


def check_H1(landscape) -> ConditionVerdict:
    n = landscape.n
    candidates = [p.name for p in landscape.gamma_minus if is_balanced(p.beta, n)]
    states, witnesses = [], []
    for subset in nonempty_subsets(candidates, what="balanced part of Gamma-"):
        M = build_matrix(landscape, subset)
        rho, state = eigen_verdict(M)
        states.append(state)
        if state != YES:
            witnesses.append({"members": list(subset), "value": rho})
    notes = ["tuples of size 1 are included; their least eigenvalue is the diagonal entry"]
    return ConditionVerdict("H1", _combine(states), witnesses, notes)


def b_set(landscape, j0_name):
    """Points y with 1/beta(y) + 1/beta(y_j0) - 2/(n-2) = 0."""
    n = landscape.n
    y0 = landscape.point(j0_name)
    return [p.name for p in landscape.points
            if p.name != j0_name and pair_sign(n, p.beta, y0.beta) == 0]


def rho_tilde(landscape, z_names, j0_name) -> float:
    n = landscape.n
    y0 = landscape.point(j0_name)
    if not y0.beta > n - 2 + BETA_TOL:
        raise BetaTooSmall(f"beta({j0_name}) = {y0.beta} must exceed n-2 = {n - 2}")
    zs = resolve_points(landscape, z_names)
    members = set(b_set(landscape, j0_name))
    for z in zs:
        if z.name not in members:
            raise NotInBj0(f"{z.name} is not an equality partner of {j0_name}")
    expo = 2.0 * y0.beta / (n - 2)
    pref = c_tilde_1(n) * 2.0 ** ((n - 2) / 2)
    total = c_beta(n, y0.beta) * y0.sum_b / y0.k_value ** (n / 2)
    for z in zs:
        ci = c_beta(n, z.beta)
        inner = (pref / ci) * (z.k_value ** (n / 2) / abs(z.sum_b)) \
            * green_function(z.position, y0.position, n) / (z.k_value * y0.k_value) ** ((n - 2) / 4)
        total += ci * abs(z.sum_b) / z.k_value ** (n / 2) * inner**expo
    return float(total)


def check_H2(landscape) -> ConditionVerdict:
    n = landscape.n
    states, witnesses = [], []
    for y0 in sorted(landscape.points, key=lambda p: p.name):
        if not y0.beta > n - 2 + BETA_TOL:
            continue
        for subset in nonempty_subsets(b_set(landscape, y0.name), what=f"B({y0.name})"):
            value = rho_tilde(landscape, subset, y0.name)
            state = zero_test(value, RHO_TILDE_BAND)
            states.append(state)
            if state != YES:
                witnesses.append({"j0": y0.name, "members": list(subset), "value": value})
    return ConditionVerdict("H2", _combine(states), witnesses)


def check_all(landscape) -> dict:
    return {"A1": check_A1(landscape), "A2": check_A2(landscape),
            "H1": check_H1(landscape), "H2": check_H2(landscape)}
