"""
lrlab Gapped Ground-State Approximation
Splits a volume around a region A, smooths the split Hamiltonian with restricted dynamics,
builds low-energy projectors on A and its complement and a boundary operator, and measures
how well P_B (P_A (x) P_rest) reproduces the ground-state projection
"""

import logging
from dataclasses import dataclass, field
from math import inf

import numpy as np
import pandas as pd
import scipy.linalg
from numpy.polynomial.hermite import hermgauss

from lrlab.errors import DomainError, ResourceError
from lrlab.lattice import SiteSet
from lrlab.lrbounds import best_velocity
from lrlab.parallel import parallel_map
from lrlab.quantum import (
    LocalOperator,
    apply_local,
    assemble,
    embed,
    gaussian_smooth,
    operator_norm,
    partial_trace,
)

logger = logging.getLogger(__name__)

THRESHOLD_FLOOR = 1e-8
QUAD_TOL = 1e-8
GH_START = 16
GH_MAX = 1024
PB_NORM_SLACK = 1e-8
STEP_SLACK = 1e-10


@dataclass(frozen=True, eq=False)
class RegionSplit:
    """Interior I, band B(ell) and exterior E of A inside `sites`, with the matching term partition.

    H_I holds terms meeting I, H_E the terms inside the complement of A that meet E, and H_B
    everything else (at ell = 1 this includes the bonds crossing the cut).
    """

    sites: SiteSet
    A: tuple
    ell: int
    boundary: tuple
    interior: tuple
    band: tuple
    exterior: tuple
    terms_I: list = field(repr=False)
    terms_B: list = field(repr=False)
    terms_E: list = field(repr=False)
    warnings: list = field(default_factory=list)

    @property
    def complement(self):
        return tuple(s for s in self.sites.sites if s not in set(self.A))

    def thickened(self, m):
        """B(m) = sites at distance < m from the boundary of A"""
        return tuple(s for s in self.sites.sites if _boundary_distance(self.sites, self.boundary, s) < m)

    def term_support(self, which):
        terms = {"I": self.terms_I, "B": self.terms_B, "E": self.terms_E}[which]
        return tuple(sorted({s for op in terms for s in op.support}))


def _boundary_distance(S, boundary, x):
    return min((S.distance(x, y) for y in boundary), default=inf)


def region_split(sites, A, ell, interaction, onsite=()):
    """I, B(ell), E of A and the partition H = H_I + H_B + H_E of interaction and onsite terms"""
    if ell < 1:
        raise DomainError(f"band width must be at least 1, got {ell}")
    A = tuple(sorted(tuple(int(c) for c in s) for s in A))
    inside = set(A)
    if not inside <= set(sites.sites):
        raise DomainError("A is not contained in the volume")
    outside = [s for s in sites.sites if s not in inside]
    boundary = tuple(x for x in A if any(sites.distance(x, y) == 1 for y in outside))
    dist = {x: _boundary_distance(sites, boundary, x) for x in sites.sites}
    interior = tuple(x for x in A if dist[x] >= ell)
    exterior = tuple(x for x in outside if dist[x] >= ell)
    band = tuple(x for x in sites.sites if dist[x] < ell)

    terms = list(interaction.terms.values()) + list(onsite)
    I, E = set(interior), set(exterior)
    terms_I, terms_B, terms_E = [], [], []
    for op in terms:
        support = set(op.support)
        if support & I:
            terms_I.append(op)
        elif support & E and not support & inside:
            terms_E.append(op)
        else:
            terms_B.append(op)

    warnings = []
    if not interior:
        warnings.append(f"interior I({ell}) is empty")
    if not exterior:
        warnings.append(f"exterior E({ell}) is empty")
    for message in warnings:
        logger.warning(message)
    return RegionSplit(sites, A, ell, boundary, interior, band, exterior, terms_I, terms_B, terms_E, warnings)


def _sum_terms(terms, region, dim_of):
    """Sum of terms as one LocalOperator on `region` (zero when there are none)"""
    region = tuple(region)
    dims = tuple(dim_of[s] for s in region)
    total = np.zeros((int(np.prod(dims)),) * 2, dtype=complex)
    for op in terms:
        total = total + embed(op, region, dim_of).matrix
    return LocalOperator(region, dims, total)


@dataclass(frozen=True, eq=False)
class SmoothedDecomposition:
    K_A: LocalOperator = field(repr=False)
    K_B: LocalOperator = field(repr=False)
    K_rest: LocalOperator = field(repr=False)
    alpha: float
    residual_sum: float
    residual_gs: dict
    shifts: dict

    @property
    def eps_emp(self):
        return max(self.residual_gs.values())


def _unique_ground(model):
    if model.ground_degeneracy != 1:
        raise DomainError(f"ground state is {model.ground_degeneracy}-fold degenerate")
    return model.eigenvectors[:, 0]


def smoothed_terms(model, split, interaction, onsite, ell, a, v):
    """K_A, K_B, K_rest from the centered H_I, H_B, H_E smoothed with H_A, H_{B(2 ell)}, H_{rest}.

    alpha = a v^2 / (2 ell). Each piece is shifted by its ground-state expectation, so the three
    shifted pieces add to H - E_0.
    """
    if a <= 0 or v <= 0:
        raise DomainError(f"a and v must be positive, got {a}, {v}")
    model.require_dense("the smoothed decomposition")
    if not split.A or not split.complement:
        raise DomainError("A and its complement must both be nonempty")
    if not split.boundary:
        raise DomainError("A has no boundary inside the volume")
    psi = _unique_ground(model)
    region = model.region
    dim_of = dict(zip(region.sites, model.dims))
    alpha = a * v**2 / (2.0 * ell)

    def centered(terms, on):
        op = _sum_terms(terms, on, dim_of)
        shift = float(np.real(np.vdot(psi, apply_local(op, region, psi, dim_of))))
        return LocalOperator(op.support, op.dims, op.matrix - shift * np.eye(op.dim)), shift

    def generator(sub):
        return assemble(interaction, onsite, region.subset(sub), local_dim=dim_of, dense_cap=model.dim)

    band2 = split.thickened(2 * ell)
    H_I, shift_I = centered(split.terms_I, split.A)
    H_B, shift_B = centered(split.terms_B, band2)
    H_E, shift_E = centered(split.terms_E, split.complement)
    K_A = gaussian_smooth(model, H_I, alpha, generator(split.A))
    K_B = gaussian_smooth(model, H_B, alpha, generator(band2))
    K_rest = gaussian_smooth(model, H_E, alpha, generator(split.complement))

    full = model.hamiltonian.matrix - model.ground_energy * np.eye(model.dim)
    pieces = {"A": K_A, "B": K_B, "rest": K_rest}
    embedded = {name: embed(K, region, dim_of).matrix for name, K in pieces.items()}
    residual_sum = operator_norm(full - sum(embedded.values()))
    residual_gs = {name: float(np.linalg.norm(M @ psi)) for name, M in embedded.items()}
    logger.info(f"smoothing ell={ell}: alpha {alpha:.4g}, residual {residual_sum:.3e}, "
                f"ground-state residuals {residual_gs}")
    return SmoothedDecomposition(K_A, K_B, K_rest, alpha, residual_sum, residual_gs,
                                 {"I": shift_I, "B": shift_B, "E": shift_E})


def _spectral_projector(K, threshold, name):
    evals, evecs = scipy.linalg.eigh(K.matrix)
    keep = evals <= threshold
    if not keep.any():
        raise DomainError(f"no eigenvalue of K_{name} at or below {threshold:.3e}; lowest {evals[:6]}")
    V = evecs[:, keep]
    return LocalOperator(K.support, K.dims, V @ V.conj().T)


def low_energy_projectors(K_A, K_rest, threshold):
    """Spectral projections of K_A and K_rest onto eigenvalues <= threshold"""
    return _spectral_projector(K_A, threshold, "A"), _spectral_projector(K_rest, threshold, "rest")


def p_alpha(model, alpha):
    """sqrt(alpha/pi) int e^{it(H - E_0)} e^{-alpha t^2} dt = sum_k e^{-(E_k - E_0)^2 / (4 alpha)} |k><k|"""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    model.require_dense("P_alpha")
    E = model.eigenvalues - model.ground_energy
    V = model.eigenvectors
    damping = np.exp(-(E**2) / (4.0 * alpha))
    return LocalOperator(model.region.sites, model.dims, (V * damping) @ V.conj().T)


def p_alpha_bound(gamma, alpha):
    return float(np.exp(-(gamma**2) / (4.0 * alpha)))


def gaussian_average(frequencies, alpha, nodes):
    """sqrt(alpha/pi) int e^{i t w} e^{-alpha t^2} dt by n-point Gauss-Hermite, for every w"""
    x, w = hermgauss(nodes)
    phases = np.exp(1j * np.multiply.outer(np.asarray(frequencies), x / np.sqrt(alpha)))
    return phases @ w / np.sqrt(np.pi)


def converged_gaussian_average(frequencies, alpha, weights=None, tol=QUAD_TOL, max_nodes=GH_MAX, jobs=None):
    """Gauss-Hermite with node doubling until the weighted change drops below tol.

    Nodes are evaluated in parallel batches; `weights` scales each frequency's contribution to the
    change (defaults to 1).
    """
    frequencies = np.asarray(frequencies)
    weights = np.ones(frequencies.shape) if weights is None else np.abs(weights)
    nodes = GH_START
    previous = gaussian_average(frequencies, alpha, nodes)
    while nodes < max_nodes:
        nodes *= 2
        x, w = hermgauss(nodes)
        chunks = np.array_split(np.arange(nodes), min(nodes, 8))
        parts = parallel_map(
            lambda idx: np.exp(1j * np.multiply.outer(frequencies, x[idx] / np.sqrt(alpha))) @ w[idx],
            chunks, jobs)
        current = sum(parts) / np.sqrt(np.pi)
        change = float(np.linalg.norm((current - previous) * weights))
        if change < tol:
            return current, nodes
        previous = current
    raise ResourceError(f"Gauss-Hermite average did not settle below {tol} with {max_nodes} nodes")


@dataclass(frozen=True, eq=False)
class BoundaryResult:
    P_B: LocalOperator = field(repr=False)
    tilde: LocalOperator = field(repr=False)
    nodes: int
    pb_norm: float
    pb_idempotence: float


def boundary_operator(model, decomposition, split, ell, method="closed", jobs=None):
    """P_B: the Gaussian average of e^{it(K_A+K_B+K_rest)} e^{-it(K_A+K_rest)}, traced down to B(3 ell).

    In the eigenbases K = sum l_i |u_i><u_i| and K_0 = sum m_j |w_j><w_j| the average is
    sum_ij g(l_i - m_j) |u_i><u_i|w_j><w_j| with g the Gaussian weight; method "closed" uses
    g(w) = e^{-w^2/(4 alpha)}, method "quadrature" computes g by Gauss-Hermite.
    """
    region = model.region
    dim_of = dict(zip(region.sites, model.dims))
    K_A, K_B, K_R = (embed(K, region, dim_of).matrix
                     for K in (decomposition.K_A, decomposition.K_B, decomposition.K_rest))
    lam, U = scipy.linalg.eigh(K_A + K_B + K_R)
    mu, W = scipy.linalg.eigh(K_A + K_R)
    overlap = U.conj().T @ W
    omega = lam[:, None] - mu[None, :]
    alpha = decomposition.alpha
    if method == "closed":
        g, nodes = np.exp(-(omega**2) / (4.0 * alpha)), 0
    elif method == "quadrature":
        g, nodes = converged_gaussian_average(omega, alpha, weights=overlap, jobs=jobs)
    else:
        raise DomainError(f"unknown method {method!r}")
    tilde = LocalOperator(region.sites, model.dims, U @ (g * overlap) @ W.conj().T)
    keep = split.thickened(3 * ell) or region.sites
    P_B = partial_trace(tilde, keep, normalized=True)
    pb = P_B.matrix
    return BoundaryResult(P_B, tilde, nodes, operator_norm(pb), operator_norm(pb @ pb - pb))


@dataclass
class GappedApproxReport:
    ell: int
    alpha: float
    a: float
    v: float
    gamma: float
    residual_sum: float
    residual_gs: dict
    eps_emp: float
    threshold: float
    markov: dict
    step2: float
    step2_bound: float
    p_alpha_error: float
    p_alpha_bound: float
    tilde_residual: float
    final_residual: float
    pb_norm: float
    pb_idempotence: float
    certificate: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def step2_passed(self):
        return self.step2 <= self.step2_bound + STEP_SLACK

    @property
    def markov_passed(self):
        return all(m["leak"] <= m["bound"] + STEP_SLACK for m in self.markov.values())

    @property
    def p_alpha_passed(self):
        return self.p_alpha_error <= self.p_alpha_bound + STEP_SLACK

    @property
    def pb_norm_passed(self):
        return self.pb_norm <= 1.0 + PB_NORM_SLACK

    @property
    def passed(self):
        return self.step2_passed and self.markov_passed and self.p_alpha_passed and self.pb_norm_passed

    def summary(self):
        return {
            "ell": self.ell,
            "alpha": self.alpha,
            "a": self.a,
            "v": self.v,
            "gamma": self.gamma,
            "residual_sum": self.residual_sum,
            "residual_gs": dict(self.residual_gs),
            "eps_emp": self.eps_emp,
            "threshold": self.threshold,
            "markov": {k: dict(v) for k, v in self.markov.items()},
            "step2": self.step2,
            "step2_bound": self.step2_bound,
            "p_alpha_error": self.p_alpha_error,
            "p_alpha_bound": self.p_alpha_bound,
            "tilde_residual": self.tilde_residual,
            "final_residual": self.final_residual,
            "norms": {"P_B": self.pb_norm, "P_B^2 - P_B": self.pb_idempotence},
            "certificate": dict(self.certificate),
            "passed": self.passed,
            "warnings": list(self.warnings),
        }


def run_pipeline(model, interaction, onsite, A, ell, a=1.0, v=2.0, method="closed", certify=True, jobs=None):
    """All three steps for one band width: smoothing, low-energy projectors, boundary operator"""
    model.require_dense("the gapped approximation pipeline")
    psi = _unique_ground(model)
    region = model.region
    dim_of = dict(zip(region.sites, model.dims))
    split = region_split(region, A, ell, interaction, onsite)
    decomposition = smoothed_terms(model, split, interaction, onsite, ell, a, v)

    eps = decomposition.eps_emp
    threshold = max(np.sqrt(eps), THRESHOLD_FLOOR)
    P_A, P_R = low_energy_projectors(decomposition.K_A, decomposition.K_rest, threshold)
    PA, PR = embed(P_A, region, dim_of).matrix, embed(P_R, region, dim_of).matrix
    markov = {}
    for name, P in (("A", PA), ("rest", PR)):
        markov[name] = {"leak": float(np.linalg.norm(psi - P @ psi)),
                        "bound": decomposition.residual_gs[name] / threshold}
    product = PA @ PR
    # P_0 has rank one, so ||P_0 X|| = ||X^dag psi||
    step2 = float(np.linalg.norm(psi - product.conj().T @ psi))
    step2_bound = markov["A"]["bound"] + markov["rest"]["bound"]

    gamma = model.gap
    P0 = np.outer(psi, psi.conj())
    p_error = operator_norm(p_alpha(model, decomposition.alpha).matrix - P0)
    boundary = boundary_operator(model, decomposition, split, ell, method, jobs)
    PB = embed(boundary.P_B, region, dim_of).matrix
    tilde_residual = operator_norm(boundary.tilde.matrix @ product - P0)
    final_residual = operator_norm(PB @ product - P0)

    certificate = {}
    if certify and interaction.terms:
        mu, velocity, _ = best_velocity(interaction, S=region)
        certificate = {"mu": mu, "velocity": velocity, "alpha": mu * velocity**2 / (2.0 * ell)}
    report = GappedApproxReport(
        ell=ell, alpha=decomposition.alpha, a=a, v=v, gamma=gamma,
        residual_sum=decomposition.residual_sum, residual_gs=decomposition.residual_gs, eps_emp=eps,
        threshold=threshold, markov=markov, step2=step2, step2_bound=step2_bound,
        p_alpha_error=p_error, p_alpha_bound=p_alpha_bound(gamma, decomposition.alpha),
        tilde_residual=tilde_residual, final_residual=final_residual,
        pb_norm=boundary.pb_norm, pb_idempotence=boundary.pb_idempotence,
        certificate=certificate, warnings=list(split.warnings),
    )
    logger.info(f"gapped approximation ell={ell}: final residual {final_residual:.3e}, "
                f"step 2 {step2:.3e} <= {step2_bound:.3e}")
    return report


def apriori_epsilon(ells, residuals, a, v, gamma, J, boundary_size, d=1):
    """Fit C in eps(ell) = C J^2 |dA| ell^{d - 1/2} e^{-ell/xi}, xi = 2 max(1/a, a v^2 / gamma^2).

    C is the smallest constant covering every measured residual; returns (C, xi, eps values).
    """
    ells = np.asarray(ells, dtype=float)
    xi = 2.0 * max(1.0 / a, a * v**2 / gamma**2)
    shape = J**2 * boundary_size * ells ** (d - 0.5) * np.exp(-ells / xi)
    C = float(np.max(np.asarray(residuals) / shape))
    return C, xi, C * shape


def monotone_trend(values, allowed=1, tol=1e-12):
    """True when values are non-increasing up to `allowed` upward steps"""
    steps = np.diff(np.asarray(values, dtype=float))
    return int(np.sum(steps > tol)) <= allowed


def pipeline_sweep(model, interaction, onsite, A, ells, a=1.0, v=2.0, J=1.0, method="closed", jobs=None):
    """run_pipeline over band widths; table plus the a-priori epsilon fit next to the empirical one"""
    reports = [run_pipeline(model, interaction, onsite, A, ell, a, v, method, certify=(i == 0), jobs=jobs)
               for i, ell in enumerate(ells)]
    table = pd.DataFrame([{
        "ell": r.ell,
        "alpha": r.alpha,
        "residual_sum": r.residual_sum,
        "eps_emp": r.eps_emp,
        "threshold": r.threshold,
        "step2": r.step2,
        "step2_bound": r.step2_bound,
        "p_alpha_error": r.p_alpha_error,
        "p_alpha_bound": r.p_alpha_bound,
        "final_residual": r.final_residual,
        "pb_norm": r.pb_norm,
        "pb_idempotence": r.pb_idempotence,
        "passed": r.passed,
    } for r in reports])
    split = region_split(model.region, A, ells[0], interaction, onsite)
    gamma = reports[0].gamma
    if gamma > 0 and np.all(table["eps_emp"] > 0):
        C, xi, eps = apriori_epsilon(table["ell"], table["eps_emp"], a, v, gamma, J, len(split.boundary),
                                     model.region.dim)
        table["eps_apriori"] = eps
        table["C_fitted"] = C
        table["xi"] = xi
    return reports, table
