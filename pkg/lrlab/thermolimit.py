"""
lrlab Thermodynamic Limit
Convergence of finite-volume dynamics along nested volumes (spin chains and the harmonic
lattice) and the time-ordered Dyson series of a perturbed evolution
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from math import factorial

import numpy as np
import pandas as pd
from numpy.polynomial import legendre
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from lrlab.errors import DomainError, ResourceError
from lrlab.harmonic import QUAD_TOL, HarmonicLattice, SiteFunction, SymplecticPropagator
from lrlab.lattice import DecayFunction, SiteSet, convolution_constant_exact
from lrlab.lrbounds import EPS_NUM, interaction_norm
from lrlab.parallel import parallel_map
from lrlab.quantum import (
    SVD_CAP,
    apply_local,
    assemble,
    dense_model,
    embed,
    heisenberg_evolve,
    operator_norm,
)

logger = logging.getLogger(__name__)

GRID_POINTS = 64
REFINE_TOL = 1e-9
MAX_REFINEMENTS = 3
WRAP_TOL = 1e-3
# round-off level of l2 differences between propagated functions
NOISE_FLOOR = 1e-14
DYSON_NODES = 16
DYSON_MAX_NODES = 256
DYSON_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class VolumeSequence:
    """Nested volumes with one interaction recipe: recipe(volume) -> (interaction, onsite terms)"""

    volumes: tuple
    recipe: object = field(repr=False)
    local_dim: int = 2

    def __post_init__(self):
        volumes = tuple(self.volumes)
        if len(volumes) < 2:
            raise DomainError("a volume sequence needs at least two volumes")
        for small, large in zip(volumes, volumes[1:]):
            if not small.issubset(large) or len(small) == len(large):
                raise DomainError(f"volumes of {len(small)} and {len(large)} sites are not strictly nested")
        object.__setattr__(self, "volumes", volumes)
        self._check_recipe()

    def _check_recipe(self):
        for (phi_s, _), (phi_l, _) in zip(self.interactions, self.interactions[1:]):
            for key, op in phi_s.terms.items():
                other = phi_l.terms.get(key)
                if other is None or not np.allclose(op.matrix, other.matrix, atol=1e-12):
                    raise DomainError(f"recipe gives different terms on {key} in different volumes")

    @classmethod
    def centered_chains(cls, sizes, recipe, local_dim=2):
        return cls(tuple(SiteSet.centered_path(n) for n in sizes), recipe, local_dim)

    @cached_property
    def interactions(self):
        return [self.recipe(volume) for volume in self.volumes]

    @property
    def largest(self):
        return self.volumes[-1]

    def model(self, n):
        phi, onsite = self.interactions[n]
        return assemble(phi, onsite, self.volumes[n], self.local_dim)


def volume_tail_bound(seq, A, n, m, t, F=None, C=None, phi_norm=None):
    """2 ||A|| ||Phi|| int_0^t (e^{2 ||Phi|| C (t-s)} - 1) ds * sum_{y in V_m \\ V_n} sum_{x in supp A} F(d(x, y))

    ||Phi|| and C are taken on the largest volume, so the value is valid for every pair.
    """
    S = seq.largest
    F = F or DecayFunction.power(S.dim)
    phi_large = seq.interactions[-1][0]
    C = convolution_constant_exact(S, F) if C is None else C
    phi_norm = interaction_norm(phi_large, F, S) if phi_norm is None else phi_norm
    annulus = [y for y in seq.volumes[m] if y not in seq.volumes[n]]
    spread = sum(F(S.distance(x, y)) for x in A.support for y in annulus)
    k = 2.0 * phi_norm * C
    t = abs(t)
    integral = np.expm1(k * t) / k - t if k > 0 else 0.0
    return float(2.0 * A.norm * phi_norm * integral * spread)


class _EvolutionDifference:
    """t -> ||tau_t^{V_m}(A) - tau_t^{V_n}(A) (x) 1||"""

    def __init__(self, small, large, A):
        self.small, self.large, self.A = small, large, A
        self.dim_of = dict(zip(large.region.sites, large.dims))
        V = large.eigenvectors
        self.rotated = V.conj().T @ embed(A, large.region, self.dim_of).matrix @ V
        self.hermitian = A.is_self_adjoint()

    def _dense(self, t):
        big = heisenberg_evolve(self.large, self.A, t).matrix
        small = embed(heisenberg_evolve(self.small, self.A, t), self.large.region, self.dim_of).matrix
        return operator_norm(big - small)

    def _operator(self, t):
        V = self.large.eigenvectors
        phase = np.exp(1j * t * self.large.eigenvalues)
        rotated = self.rotated * phase[:, None] * phase.conj()[None, :]
        small = heisenberg_evolve(self.small, self.A, t)
        small_adj = small.adjoint()
        region = self.large.region

        def matvec(v):
            v = np.asarray(v).reshape(-1)
            return V @ (rotated @ (V.conj().T @ v)) - apply_local(small, region, v, self.dim_of)

        def rmatvec(v):
            v = np.asarray(v).reshape(-1)
            return V @ (rotated.conj().T @ (V.conj().T @ v)) - apply_local(small_adj, region, v, self.dim_of)

        return matvec, rmatvec

    def __call__(self, t):
        if self.large.dim <= SVD_CAP:
            return self._dense(t)
        matvec, rmatvec = self._operator(t)
        dim = self.large.dim
        v0 = np.random.default_rng(0).standard_normal(dim).astype(complex)
        try:
            if self.hermitian:
                D = LinearOperator((dim, dim), matvec=matvec, dtype=complex)
                value = abs(eigsh(D, k=1, which="LM", v0=v0, return_eigenvectors=False)[0])
            else:
                DD = LinearOperator((dim, dim), matvec=lambda v: rmatvec(matvec(v)), dtype=complex)
                value = np.sqrt(max(eigsh(DD, k=1, which="LA", v0=v0, return_eigenvectors=False)[0], 0.0))
        except ArpackNoConvergence as exc:
            raise ResourceError(f"norm iteration did not converge at t={t}: {exc}") from exc
        return float(value)


def _refined_sweep(fn, t_max, points, refine_tol, max_refinements, jobs):
    """Evaluate fn on a uniform grid, halving the spacing until the maximum moves by less than refine_tol"""
    if t_max == 0:
        return np.array([0.0]), np.array([fn(0.0)]), 0
    times = np.linspace(0.0, t_max, points)
    values = np.array(parallel_map(fn, times, jobs))
    refinements = 0
    while refinements < max_refinements:
        mids = 0.5 * (times[:-1] + times[1:])
        extra = np.array(parallel_map(fn, mids, jobs))
        best = max(values.max(), extra.max())
        change = best - values.max()
        times = np.concatenate([times, mids])
        values = np.concatenate([values, extra])
        order = np.argsort(times)
        times, values = times[order], values[order]
        refinements += 1
        if change < refine_tol:
            break
    return times, values, refinements


def volume_convergence(seq, A, t_max, points=GRID_POINTS, refine_tol=REFINE_TOL,
                       max_refinements=MAX_REFINEMENTS, eps_num=EPS_NUM, jobs=None):
    """sup over the t-grid of ||tau_t^{V_m}(A) - tau_t^{V_n}(A)|| for consecutive volumes, with the tail bound.

    Returns a table with columns n, m (volume sizes), delta, tail_bound (at t_max), pass
    (delta below the tail bound at every grid time) and refinements.
    """
    if t_max < 0:
        raise DomainError(f"t_max must be nonnegative, got {t_max}")
    if not set(A.support) <= set(seq.volumes[0].sites):
        raise DomainError(f"observable support {A.support} is not inside the smallest volume")
    models = [seq.model(i) for i in range(len(seq.volumes))]
    S = seq.largest
    F = DecayFunction.power(S.dim)
    C = convolution_constant_exact(S, F)
    phi_norm = interaction_norm(seq.interactions[-1][0], F, S)
    rows = []
    for n in range(len(models) - 1):
        diff = _EvolutionDifference(models[n], models[n + 1], A)
        times, values, refinements = _refined_sweep(diff, t_max, points, refine_tol, max_refinements, jobs)
        tails = np.array([volume_tail_bound(seq, A, n, n + 1, t, F, C, phi_norm) for t in times])
        rows.append({
            "n": len(seq.volumes[n]),
            "m": len(seq.volumes[n + 1]),
            "delta": float(values.max()),
            "tail_bound": float(tails[-1]),
            "pass": bool(np.all(values <= tails + eps_num)),
            "refinements": refinements,
        })
        logger.info(f"volumes {rows[-1]['n']} -> {rows[-1]['m']}: delta {rows[-1]['delta']:.3e}, "
                    f"tail {rows[-1]['tail_bound']:.3e}")
    return pd.DataFrame(rows)


def harmonic_volume_convergence(d, omega, lam, mapping, t, Ls=(8, 16, 32, 64), wrap_tol=WRAP_TOL,
                                tol=QUAD_TOL, jobs=None):
    """||T_t^{L} f - T_t^{Z^d} f|| in l2 over |x| <= L/2, for each half-width L.

    `mapping` gives f as site -> value near the origin. A row is flagged as wraparound when the
    infinite-volume T_t f carries more than wrap_tol of l2 norm outside the torus (-L, L]^d.
    """
    infinite = HarmonicLattice(d, omega, lam)
    exact = SymplecticPropagator(infinite, t, tol=tol, jobs=jobs)(SiteFunction.from_dict(infinite, mapping))
    sites, values = _entries(exact)
    rows = []
    for L in Ls:
        lattice = HarmonicLattice(d, omega, lam, L)
        finite = SymplecticPropagator(lattice, t)(SiteFunction.from_dict(lattice, mapping))
        window = [x for x in product(range(-(L // 2), L // 2 + 1), repeat=d) if sum(map(abs, x)) <= L // 2]
        difference = np.sqrt(sum(abs(finite.at(x) - exact.at(x)) ** 2 for x in window))
        outside = np.array([any(not -L < c <= L for c in x) for x in sites], dtype=bool)
        outside_norm = float(np.linalg.norm(values[outside])) if outside.any() else 0.0
        rows.append({
            "L": L,
            "difference": float(difference),
            "outside_norm": outside_norm,
            "wraparound": outside_norm > wrap_tol,
        })
        if rows[-1]["wraparound"]:
            logger.warning(f"L={L}, t={t}: {outside_norm:.3g} of the evolved function lies outside the torus")
    return pd.DataFrame(rows)


def _entries(f):
    idx = np.argwhere(np.ones(f.values.shape, dtype=bool))
    return [tuple(x) for x in idx + np.array(f.origin)], f.values.reshape(-1)


# Dyson series

def dyson_remainder_bound(V_norm, A_norm, t, n):
    """(2||V|| t)^{n+1} / (n+1)! ||A|| e^{2||V|| t}"""
    x = 2.0 * V_norm * abs(t)
    return float(x ** (n + 1) / factorial(n + 1) * A_norm * np.exp(x))


def _integration_matrix(N):
    """Gauss-Legendre nodes and weights on [-1, 1] with S[i, j] = int_{x_i}^{1} l_j(u) du"""
    nodes, weights = legendre.leggauss(N)
    coeffs = np.linalg.inv(legendre.legvander(nodes, N - 1))
    antiderivative = legendre.legint(coeffs, axis=0)
    at_nodes = legendre.legval(nodes, antiderivative)
    at_end = legendre.legval(1.0, antiderivative)
    return nodes, weights, at_end[None, :] - at_nodes.T


def _dyson_terms(E, v_hat, b_hat, t, n_max, N):
    """Order-k terms i^k int_{s_k < ... < s_1 < t} [V(s_k), [..., [V(s_1), B]]] in the H0 eigenbasis"""
    nodes, weights, S = _integration_matrix(N)
    half = 0.5 * t
    s = half * (nodes + 1.0)
    gaps = E[:, None] - E[None, :]
    Vs = v_hat[None, :, :] * np.exp(1j * s[:, None, None] * gaps[None, :, :])
    terms = []
    Q = np.broadcast_to(b_hat, (N,) + b_hat.shape)
    integrated = Q
    for k in range(1, n_max + 1):
        Q = 1j * (Vs @ integrated - integrated @ Vs)
        terms.append(half * np.einsum("i,iab->ab", weights, Q))
        integrated = half * np.einsum("ij,jab->iab", S, Q)
    return terms


@dataclass
class DysonReport:
    """Partial sums of the Dyson series against the exact perturbed evolution"""

    t: float
    term_norms: np.ndarray
    remainders: np.ndarray
    bounds: np.ndarray
    nodes: int
    eps_num: float = EPS_NUM

    @property
    def passed(self):
        return bool(np.all(self.remainders <= self.bounds + self.eps_num))

    def to_frame(self):
        order = np.arange(len(self.remainders))
        return pd.DataFrame({
            "order": order,
            "term_norm": self.term_norms,
            "remainder": self.remainders,
            "bound": self.bounds,
            "pass": self.remainders <= self.bounds + self.eps_num,
        })

    def summary(self):
        return {
            "t": self.t,
            "n_max": int(len(self.remainders) - 1),
            "nodes": self.nodes,
            "final_remainder": float(self.remainders[-1]),
            "passed": self.passed,
        }


def dyson_truncation(H0, V, A, t, n_max, eps_num=EPS_NUM, tol=DYSON_TOL, max_nodes=DYSON_MAX_NODES):
    """Dyson partial sums of tau_t(A) for H0 + V, up to order n_max.

    The expansion runs in the interaction picture of H0: order k integrates k nested commutators
    with V(s) = e^{isH0} V e^{-isH0} over the simplex, the innermost carrying the latest time.
    Nested integrals use a Gauss-Legendre integration matrix whose node count doubles until every
    term moves by less than tol.
    """
    H0.require_dense("the Dyson series")
    if n_max < 0:
        raise DomainError(f"n_max must be nonnegative, got {n_max}")
    dim_of = dict(zip(H0.region.sites, H0.dims))
    U = H0.eigenvectors
    v_full = embed(V, H0.region, dim_of).matrix
    v_hat = U.conj().T @ v_full @ U
    free = heisenberg_evolve(H0, A, t)
    b_hat = U.conj().T @ free.matrix @ U

    N = DYSON_NODES
    terms = _dyson_terms(H0.eigenvalues, v_hat, b_hat, t, n_max, N)
    while n_max > 0:
        if 2 * N > max_nodes:
            raise ResourceError(f"Dyson quadrature did not settle below {tol} with {N} nodes")
        finer = _dyson_terms(H0.eigenvalues, v_hat, b_hat, t, n_max, 2 * N)
        change = max(np.linalg.norm(a - b) for a, b in zip(terms, finer))
        terms, N = finer, 2 * N
        if change < tol * max(1.0, A.norm):
            break

    full = dense_model(H0.region, H0.dims, H0.hamiltonian.matrix + v_full)
    exact = U.conj().T @ heisenberg_evolve(full, A, t).matrix @ U
    partial = b_hat.copy()
    term_norms = [operator_norm(b_hat)]
    remainders = [operator_norm(exact - partial)]
    for term in terms:
        partial = partial + term
        term_norms.append(operator_norm(term))
        remainders.append(operator_norm(exact - partial))
    V_norm = V.norm
    bounds = [dyson_remainder_bound(V_norm, A.norm, t, n) for n in range(n_max + 1)]
    report = DysonReport(float(t), np.array(term_norms), np.array(remainders), np.array(bounds), N, eps_num)
    logger.info(f"Dyson series at t={t}: {n_max} orders, {N} nodes, final remainder {remainders[-1]:.3e}")
    return report
