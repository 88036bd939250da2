"""
lrlab Lieb-Robinson Bounds
Interactions, their F-norms and boundaries, the commutator bound and its exponential form,
the series coefficients of the bound's proof, and measured-vs-bound sweeps
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd

from lrlab.errors import DomainError, ResourceError
from lrlab.lattice import (
    DEFAULT_TRIPLE_BUDGET,
    DecayFunction,
    SiteSet,
    convolution_constant_exact,
    uniform_integral,
)
from lrlab.quantum import commutator_norms

logger = logging.getLogger(__name__)

EPS_NUM = 1e-8
VELOCITY_GRID = (0.25, 0.5, 1.0, 2.0)


def _key(sites):
    return tuple(sorted(tuple(int(c) for c in s) for s in sites))


@dataclass(frozen=True, eq=False)
class Interaction:
    """Map X -> Phi(X) over the finite site set `sites`; every Phi(X) self-adjoint with support X"""

    sites: SiteSet
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        terms = {}
        for key, op in self.terms.items():
            key = _key(key)
            if op.support != key:
                raise DomainError(f"term keyed by {key} has support {op.support}")
            if not all(s in self.sites for s in key):
                raise DomainError(f"term {key} leaves the site set")
            if not op.is_self_adjoint():
                raise DomainError(f"term {key} is not self-adjoint")
            terms[key] = op
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_operators(cls, sites, operators):
        """Key each operator by its support; operators on the same support are added"""
        terms = {}
        for op in operators:
            terms[op.support] = terms[op.support] + op if op.support in terms else op
        return cls(sites, terms)

    def __len__(self):
        return len(self.terms)

    @cached_property
    def norms(self):
        return {key: op.norm for key, op in self.terms.items()}

    def nonzero_keys(self):
        return [key for key, value in self.norms.items() if value > 0.0]

    def restrict(self, region):
        """Terms with support inside `region`"""
        inside = set(region)
        terms = {key: op for key, op in self.terms.items() if set(key) <= inside}
        region = region if isinstance(region, SiteSet) else self.sites.subset(region)
        return Interaction(region, terms)

    def surface(self, Z):
        """Nonzero terms meeting both Z and its complement"""
        Z = set(Z)
        return [key for key in self.nonzero_keys() if Z & set(key) and set(key) - Z]


def interaction_norm(phi, F, S=None):
    """max over (x, y) of sum_{X containing x, y} ||Phi(X)|| / F(d(x, y))"""
    S = S or phi.sites
    if not phi.terms:
        return 0.0
    weights = np.zeros((len(S), len(S)))
    for key, value in phi.norms.items():
        idx = [S.index(s) for s in key]
        weights[np.ix_(idx, idx)] += value
    return float(np.max(weights / F(S.distance_matrix)))


def phi_boundary(phi, X):
    """Sites of X lying in some nonzero term that straddles X and its complement"""
    X = set(_key(X))
    boundary = set()
    for key in phi.surface(X):
        boundary |= X & set(key)
    return tuple(sorted(boundary))


def _disjoint(X, Y):
    if set(_key(X)) & set(_key(Y)):
        raise DomainError("X and Y overlap; the bound needs d(X, Y) > 0")


def d_factor(phi, F, X, Y, S=None):
    """min of sum over (dX x Y) and over (X x dY) of F(d(x, y))"""
    S = S or phi.sites
    _disjoint(X, Y)
    X, Y = _key(X), _key(Y)

    def double_sum(left, right):
        if not left or not right:
            return 0.0
        dist = np.array([[S.distance(x, y) for y in right] for x in left])
        return float(np.sum(F(dist)))

    return min(double_sum(phi_boundary(phi, X), Y), double_sum(X, phi_boundary(phi, Y)))


def lr_bound(phi, F, C, X, Y, normA, normB, t, S=None, phi_norm=None):
    """(2 ||A|| ||B|| / C)(e^{2 C ||Phi|| |t|} - 1) D(X, Y)"""
    if C <= 0:
        raise DomainError(f"convolution constant must be positive, got {C}")
    if phi_norm is None:
        phi_norm = interaction_norm(phi, F, S)
    D = d_factor(phi, F, X, Y, S)
    return float(2.0 * normA * normB / C * np.expm1(2.0 * C * phi_norm * abs(t)) * D)


def lr_velocity(phi, F_mu, C_mu, mu, S=None):
    """2 ||Phi||_mu C_mu / mu"""
    if mu <= 0:
        raise DomainError(f"decay rate must be positive, got {mu}")
    return 2.0 * interaction_norm(phi, F_mu, S) * C_mu / mu


def best_velocity(phi, mus=VELOCITY_GRID, S=None, budget=DEFAULT_TRIPLE_BUDGET):
    """Velocity certificate on a grid of rates; returns (mu, velocity, table)"""
    S = S or phi.sites
    rows = []
    for mu in mus:
        F_mu = DecayFunction.exp_power(mu, S.dim)
        C_mu = convolution_constant_exact(S, F_mu, budget)
        rows.append({
            "mu": mu,
            "phi_norm": interaction_norm(phi, F_mu, S),
            "C_mu": C_mu,
            "velocity": lr_velocity(phi, F_mu, C_mu, mu, S),
        })
    table = pd.DataFrame(rows)
    best = table.loc[table["velocity"].idxmin()]
    return float(best["mu"]), float(best["velocity"]), table


def exponential_bound(phi, mu, X, Y, normA, normB, t, S=None, budget=DEFAULT_TRIPLE_BUDGET):
    """(2 ||A|| ||B|| / C_mu) ||F|| min(|dX|, |dY|) e^{-mu (d(X,Y) - v |t|)}, v = 2 ||Phi||_mu C_mu / mu"""
    S = S or phi.sites
    _disjoint(X, Y)
    F_mu = DecayFunction.exp_power(mu, S.dim)
    C_mu = convolution_constant_exact(S, F_mu, budget)
    velocity = lr_velocity(phi, F_mu, C_mu, mu, S)
    boundary = min(len(phi_boundary(phi, X)), len(phi_boundary(phi, Y)))
    spread = uniform_integral(S, DecayFunction.power(S.dim))
    distance = S.set_distance(_key(X), _key(Y))
    return float(2.0 * normA * normB / C_mu * spread * boundary
                 * np.exp(-mu * (distance - velocity * abs(t))))


def series_coefficient(phi, X, Y, n, budget=10**6, max_sites=8, max_order=3):
    """a_n: sum over chains Z_1 in S(X), Z_{k+1} in S(Z_k) ending in a term that meets Y"""
    if len(phi.sites) > max_sites:
        raise ResourceError(f"{len(phi.sites)} sites is above the enumeration cap of {max_sites}")
    if n < 1 or n > max_order:
        raise ResourceError(f"order {n} is outside 1..{max_order}")
    Y = set(_key(Y))
    visited = 0

    def walk(Z, depth, weight):
        nonlocal visited
        total = 0.0
        for key in phi.surface(Z):
            visited += 1
            if visited > budget:
                raise ResourceError(f"chain enumeration exceeded {budget} steps")
            w = weight * phi.norms[key]
            if depth == n:
                total += w if Y & set(key) else 0.0
            else:
                total += walk(set(key), depth + 1, w)
        return total

    return walk(set(_key(X)), 1, 1.0)


def series_coefficient_bound(phi, F, C, X, Y, n, S=None):
    """||Phi||^n C^(n-1) sum over (dX x Y) of F(d(x, y))"""
    S = S or phi.sites
    boundary = phi_boundary(phi, X)
    total = sum(F(S.distance(x, y)) for x in boundary for y in _key(Y))
    return interaction_norm(phi, F, S) ** n * C ** (n - 1) * float(total)


def _label(support):
    return " ".join(",".join(str(c) for c in site) for site in support)


@dataclass
class BoundReport:
    """Measured commutator norms against bound values on a (t, pair) grid"""

    times: np.ndarray
    pairs: list
    measured: np.ndarray
    bound: np.ndarray
    eps_num: float = EPS_NUM
    form: str = "series"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.measured = np.asarray(self.measured, dtype=float)
        self.bound = np.asarray(self.bound, dtype=float)
        if not len(self.times) == len(self.pairs) == len(self.measured) == len(self.bound):
            raise DomainError("report columns have different lengths")

    @property
    def margin(self):
        return self.bound - self.measured

    @property
    def point_passed(self):
        return self.margin >= -self.eps_num

    @property
    def passed(self):
        return bool(np.all(self.point_passed))

    def to_frame(self):
        return pd.DataFrame({
            "t": self.times,
            "pair": self.pairs,
            "measured": self.measured,
            "bound": self.bound,
            "margin": self.margin,
            "pass": self.point_passed,
        })

    def summary(self):
        return {
            "form": self.form,
            "max_violation": float(np.max(-self.margin)) if len(self.times) else 0.0,
            "min_margin": float(np.min(self.margin)) if len(self.times) else 0.0,
            "n_points": int(len(self.times)),
            "passed": self.passed,
        }


def verify_lr(model, phi, F, A, B, t_grid, C=None, form="series", mu=1.0,
              eps_num=EPS_NUM, budget=DEFAULT_TRIPLE_BUDGET, jobs=None):
    """Sweep ||[tau_t(A), B]|| over t_grid and compare with the series or exponential bound"""
    _disjoint(A.support, B.support)
    t_grid = np.asarray(t_grid, dtype=float)
    measured = commutator_norms(model, A, B, t_grid, jobs=jobs)
    S = phi.sites
    if form == "series":
        C = C if C is not None else convolution_constant_exact(S, F, budget)
        phi_norm = interaction_norm(phi, F, S)
        bound = [lr_bound(phi, F, C, A.support, B.support, A.norm, B.norm, t, S, phi_norm) for t in t_grid]
    elif form == "exponential":
        bound = [exponential_bound(phi, mu, A.support, B.support, A.norm, B.norm, t, S, budget) for t in t_grid]
    else:
        raise DomainError(f"unknown bound form {form!r}")
    label = f"{_label(A.support)}|{_label(B.support)}"
    report = BoundReport(t_grid, [label] * len(t_grid), measured, bound, eps_num, form)
    logger.info(f"{form} bound sweep {label}: {len(t_grid)} points, min margin {report.summary()['min_margin']:.3g}")
    return report
