"""
lrlab Quantum
Finite-dimensional operator algebra: local operators, tensor embeddings and partial traces,
Hamiltonian assembly with dense or Lanczos spectra, Heisenberg evolution and Gaussian smoothing
"""

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import prod

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from lrlab.errors import DomainError, ResourceError, UnsupportedError
from lrlab.lattice import SiteSet
from lrlab.parallel import parallel_map

logger = logging.getLogger(__name__)

DENSE_CAP = 4096
SVD_CAP = 512
SPARSE_CAP = 531441
SELF_ADJOINT_TOL = 1e-12
CLUSTER_TOL = 1e-8
RESIDUAL_TOL = 1e-8


def operator_norm(M, tol=1e-10, max_iter=10_000):
    """Largest singular value: full SVD up to SVD_CAP, power iteration on M^dag M above"""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    if min(M.shape) <= SVD_CAP:
        return float(np.linalg.norm(M, 2))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max_iter):
        w = M.conj().T @ (M @ v)
        rayleigh = float(np.real(np.vdot(v, w)))
        size = np.linalg.norm(w)
        if size == 0.0:
            return 0.0
        v = w / size
        if abs(rayleigh - estimate) <= tol * max(rayleigh, 1e-300):
            return float(np.sqrt(rayleigh))
        estimate = rayleigh
    raise ResourceError(f"power iteration did not converge in {max_iter} steps")


def _sites(region):
    if isinstance(region, SiteSet):
        return region.sites
    return tuple(sorted(tuple(int(c) for c in s) for s in region))


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """Complex square matrix acting on the tensor product over `support` (lexicographic order)"""

    support: tuple
    dims: tuple
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        support = tuple(tuple(int(c) for c in s) for s in self.support)
        dims = self.dims
        if isinstance(dims, (int, np.integer)):
            dims = (int(dims),) * len(support)
        dims = tuple(int(x) for x in dims)
        if len(dims) != len(support):
            raise DomainError(f"{len(dims)} local dimensions for {len(support)} sites")
        if len(set(support)) != len(support):
            raise DomainError(f"repeated sites in support {support}")
        matrix = np.array(self.matrix, dtype=complex)
        size = prod(dims)
        if matrix.shape != (size, size):
            raise DomainError(f"matrix shape {matrix.shape} does not match local dims {dims}")
        order = sorted(range(len(support)), key=lambda i: support[i])
        if order != list(range(len(support))):
            n = len(support)
            matrix = matrix.reshape(dims + dims).transpose(order + [n + i for i in order]).reshape(size, size)
            support = tuple(support[i] for i in order)
            dims = tuple(dims[i] for i in order)
        matrix.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def on(cls, sites, matrix, local_dim):
        return cls(tuple(tuple(s) if np.ndim(s) else (int(s),) for s in sites), local_dim, matrix)

    @classmethod
    def identity(cls, sites, local_dim):
        return cls.on(sites, np.eye(local_dim ** len(sites)), local_dim)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @cached_property
    def norm(self):
        return operator_norm(self.matrix)

    def is_self_adjoint(self, tol=SELF_ADJOINT_TOL):
        scale = max(np.linalg.norm(self.matrix), 1e-300)
        return np.linalg.norm(self.matrix - self.matrix.conj().T) <= tol * scale

    def adjoint(self):
        return LocalOperator(self.support, self.dims, self.matrix.conj().T)

    def translated(self, shift):
        shift = (shift,) if np.ndim(shift) == 0 else tuple(shift)
        support = tuple(tuple(c + s for c, s in zip(site, shift)) for site in self.support)
        return LocalOperator(support, self.dims, self.matrix)

    def _check_same_support(self, other):
        if self.support != other.support or self.dims != other.dims:
            raise DomainError("operators live on different supports; embed them first")

    def __add__(self, other):
        self._check_same_support(other)
        return LocalOperator(self.support, self.dims, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check_same_support(other)
        return LocalOperator(self.support, self.dims, self.matrix - other.matrix)

    def __matmul__(self, other):
        self._check_same_support(other)
        return LocalOperator(self.support, self.dims, self.matrix @ other.matrix)

    def __mul__(self, scalar):
        return LocalOperator(self.support, self.dims, scalar * self.matrix)

    __rmul__ = __mul__

    def to_json(self):
        return json.dumps({
            "support": [list(s) for s in self.support],
            "dims": list(self.dims),
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        matrix = np.array(data["re"], dtype=float) + 1j * np.array(data["im"], dtype=float)
        return cls(tuple(tuple(s) for s in data["support"]), tuple(data["dims"]), matrix)


def _dims_for(sites, ops, local_dim):
    """Per-site dimension map over `sites`, consistent with every operator in `ops`"""
    dims = {}
    for op in ops:
        for s, d in zip(op.support, op.dims):
            if dims.setdefault(s, d) != d:
                raise DomainError(f"site {s} has dimensions {dims[s]} and {d}")
    if isinstance(local_dim, dict):
        for s, d in local_dim.items():
            s = tuple(s)
            if dims.setdefault(s, d) != d:
                raise DomainError(f"site {s} has dimensions {dims[s]} and {d}")
    elif local_dim is not None:
        for s, d in list(dims.items()):
            if d != local_dim:
                raise DomainError(f"site {s} has dimension {d}, region uses {local_dim}")
    missing = [s for s in sites if s not in dims]
    if missing:
        if isinstance(local_dim, int):
            fill = local_dim
        else:
            known = set(dims.values())
            if len(known) != 1:
                raise DomainError(f"no local dimension known for sites {missing[:3]}")
            fill = known.pop()
        for s in missing:
            dims[s] = fill
    return [dims[s] for s in sites]


def embed(A, region, local_dim=None):
    """A tensor identity on `region`, with sites in region order"""
    sites = _sites(region)
    if not set(A.support) <= set(sites):
        raise DomainError(f"support {A.support} is not contained in the region")
    dims = _dims_for(sites, [A], local_dim)
    dim_of = dict(zip(sites, dims))
    rest = [s for s in sites if s not in set(A.support)]
    d_rest = prod(dim_of[s] for s in rest)
    full = np.kron(A.matrix, np.eye(d_rest))
    order = list(A.support) + rest
    if order == list(sites):
        return LocalOperator(sites, tuple(dims), full)
    n = len(order)
    perm = [order.index(s) for s in sites]
    current = [dim_of[s] for s in order]
    size = prod(dims)
    full = full.reshape(current + current).transpose(perm + [n + p for p in perm]).reshape(size, size)
    return LocalOperator(sites, tuple(dims), full)


def partial_trace(op, keep, normalized=True):
    """Trace out every site of op.support outside `keep`; divided by the traced dimension when normalized"""
    keep = set(_sites(keep))
    kept = [s for s in op.support if s in keep]
    traced = [s for s in op.support if s not in keep]
    n = len(op.support)
    kept_idx = [op.support.index(s) for s in kept]
    traced_idx = [op.support.index(s) for s in traced]
    dk = prod(op.dims[i] for i in kept_idx)
    dt = prod(op.dims[i] for i in traced_idx)
    perm = kept_idx + traced_idx
    T = op.matrix.reshape(list(op.dims) * 2).transpose(perm + [n + p for p in perm])
    T = T.reshape(dk, dt, dk, dt)
    reduced = np.einsum("iaja->ij", T)
    if normalized:
        reduced = reduced / dt
    return LocalOperator(tuple(kept), tuple(op.dims[i] for i in kept_idx), reduced)


def apply_local(op, region, vectors, local_dim=None):
    """Apply op (tensor identity) to state vectors on `region` without forming the full matrix"""
    sites = list(_sites(region))
    dims = _dims_for(sites, [op], local_dim)
    vectors = np.asarray(vectors)
    single = vectors.ndim == 1
    V = vectors.reshape(dims + [-1])
    axes = [sites.index(s) for s in op.support]
    k = len(axes)
    T = op.matrix.reshape(list(op.dims) * 2)
    out = np.tensordot(T, V, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes).reshape(prod(dims), -1)
    return out[:, 0] if single else out


def _operator_schmidt(M, d_first, d_rest, cutoff=1e-14):
    """M = sum_j A_j (x) R_j with A_j on the first factor"""
    T = M.reshape(d_first, d_rest, d_first, d_rest).transpose(0, 2, 1, 3).reshape(d_first**2, d_rest**2)
    U, s, Vh = np.linalg.svd(T, full_matrices=False)
    keep = s > cutoff * max(s[0], 1e-300) if s.size else []
    pairs = []
    for j in np.flatnonzero(keep):
        root = np.sqrt(s[j])
        pairs.append(((U[:, j] * root).reshape(d_first, d_first), (Vh[j] * root).reshape(d_rest, d_rest)))
    return pairs


def _product_terms(matrix, dims):
    """Expand a multi-site matrix into a sum of tensor products of single-site matrices"""
    if len(dims) == 1:
        return [[matrix]]
    terms = []
    for first, rest in _operator_schmidt(matrix, dims[0], prod(dims[1:])):
        for tail in _product_terms(rest, dims[1:]):
            terms.append([first] + tail)
    return terms


def sparse_embed(op, region, local_dim=None):
    """A tensor identity on `region` as a CSR matrix"""
    sites = list(_sites(region))
    dims = _dims_for(sites, [op], local_dim)
    positions = [sites.index(s) for s in op.support]
    left = prod(dims[: positions[0]])
    right = prod(dims[positions[-1] + 1:])
    if positions == list(range(positions[0], positions[-1] + 1)):
        block = sp.kron(sp.identity(left, format="csr"), sp.csr_matrix(op.matrix), format="csr")
        return sp.kron(block, sp.identity(right, format="csr"), format="csr")
    total = None
    for factors in _product_terms(op.matrix, list(op.dims)):
        by_site = dict(zip(positions, factors))
        term = sp.identity(1, format="csr")
        for i, d in enumerate(dims):
            piece = sp.csr_matrix(by_site[i]) if i in by_site else sp.identity(d, format="csr")
            term = sp.kron(term, piece, format="csr")
        total = term if total is None else total + term
    return total


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Assembled Hamiltonian on `region` with its (full or lowest-k) spectral data"""

    region: SiteSet
    dims: tuple
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    dense: bool
    norm: float
    hamiltonian: LocalOperator = field(default=None, repr=False)
    sparse_hamiltonian: object = field(default=None, repr=False)

    @property
    def dim(self):
        return prod(self.dims)

    @property
    def cluster_tol(self):
        return CLUSTER_TOL * max(self.norm, 1.0)

    @property
    def ground_energy(self):
        return float(self.eigenvalues[0])

    @property
    def ground_degeneracy(self):
        return int(np.sum(self.eigenvalues - self.eigenvalues[0] <= self.cluster_tol))

    @property
    def gap(self):
        """First eigenvalue above the ground cluster minus E_0 (0 when none is retained)"""
        above = self.eigenvalues[self.eigenvalues - self.eigenvalues[0] > self.cluster_tol]
        return float(above[0] - self.eigenvalues[0]) if above.size else 0.0

    @property
    def ground_vectors(self):
        return self.eigenvectors[:, : self.ground_degeneracy]

    def matvec(self, vectors):
        if self.dense:
            return self.hamiltonian.matrix @ vectors
        return self.sparse_hamiltonian @ vectors

    def require_dense(self, what):
        if not self.dense:
            raise UnsupportedError(f"{what} needs the full eigenbasis; region dimension {self.dim} is above {DENSE_CAP}")


def _check_terms(terms):
    for op in terms:
        if not op.is_self_adjoint():
            raise DomainError(f"term on {op.support} is not self-adjoint")


def assemble(interaction, onsite, region, local_dim=None, n_eigs=8, dense_cap=DENSE_CAP):
    """H = sum of onsite terms and interaction terms contained in `region`, with spectral data.

    Terms whose support leaves the region are dropped, so the same interaction restricted to a
    subregion assembles the local Hamiltonian of that subregion.
    """
    region = region if isinstance(region, SiteSet) else SiteSet(_sites(region))
    inside = set(region.sites)
    terms = list(interaction.terms.values()) if interaction is not None else []
    terms += list(onsite or [])
    _check_terms(terms)
    kept = [op for op in terms if set(op.support) <= inside]
    if len(kept) < len(terms):
        logger.debug(f"assemble: dropped {len(terms) - len(kept)} of {len(terms)} terms outside the region")
    terms = kept
    dims = tuple(_dims_for(list(region.sites), terms, local_dim))
    dim = prod(dims)
    if dim > SPARSE_CAP:
        raise ResourceError(f"region dimension {dim} exceeds the sparse cap {SPARSE_CAP}")
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for op in terms:
        H = H + sparse_embed(op, region, dict(zip(region.sites, dims)))
    if dim <= dense_cap:
        logger.debug(f"dense diagonalization of {dim} states on {len(region)} sites")
        return dense_model(region, dims, H.toarray())
    return _lanczos_model(H, region, dims, n_eigs)


def dense_model(region, dims, matrix):
    """SpectralModel from an explicit Hermitian matrix on `region`"""
    region = region if isinstance(region, SiteSet) else SiteSet(_sites(region))
    matrix = np.asarray(matrix, dtype=complex)
    matrix = 0.5 * (matrix + matrix.conj().T)
    evals, evecs = scipy.linalg.eigh(matrix)
    norm = float(np.max(np.abs(evals))) if evals.size else 0.0
    return SpectralModel(region, tuple(dims), evals, evecs, True, norm,
                         hamiltonian=LocalOperator(region.sites, tuple(dims), matrix))


def _rayleigh_ritz(H, vectors):
    """Orthonormal Ritz pairs of H on span(vectors), ascending.

    eigsh does not orthonormalize inside a degenerate cluster.
    """
    Q = scipy.linalg.orth(vectors)
    if Q.shape[1] < vectors.shape[1]:
        logger.warning(f"Lanczos returned {vectors.shape[1]} vectors spanning only {Q.shape[1]} dimensions")
    evals, U = scipy.linalg.eigh(Q.conj().T @ (H @ Q))
    return evals, Q @ U


def _lanczos_model(H, region, dims, n_eigs):
    dim = H.shape[0]
    v0 = np.random.default_rng(0).standard_normal(dim)
    top = eigsh(H, k=1, which="LA", v0=v0, return_eigenvectors=False)
    bottom = eigsh(H, k=1, which="SA", v0=v0, return_eigenvectors=False)
    norm = float(max(abs(top[0]), abs(bottom[0])))
    k = n_eigs
    while True:
        try:
            evals, evecs = eigsh(H, k=k, which="SA", v0=v0, tol=0)
        except Exception as exc:
            raise ResourceError(f"Lanczos did not converge for {k} pairs: {exc}") from exc
        evals, evecs = _rayleigh_ritz(H, evecs)
        residual = np.linalg.norm(H @ evecs - evecs * evals, axis=0).max()
        if residual > RESIDUAL_TOL * max(norm, 1.0):
            raise ResourceError(f"Lanczos residual {residual:.3g} above tolerance")
        cluster = np.sum(evals - evals[0] <= CLUSTER_TOL * max(norm, 1.0))
        if cluster < k or k >= 64:
            break
        k *= 2
    logger.debug(f"Lanczos: {k} lowest pairs of {dim} states, ground cluster {cluster}")
    return SpectralModel(region, dims, evals, evecs, False, norm, sparse_hamiltonian=H)


def _phases(model, t):
    return np.exp(1j * t * model.eigenvalues)


def heisenberg_evolve(model, A, t):
    """tau_t(A) = e^{itH} A e^{-itH} by conjugation in the eigenbasis"""
    model.require_dense("Heisenberg evolution")
    full = embed(A, model.region, dict(zip(model.region.sites, model.dims))).matrix
    V = model.eigenvectors
    phase = _phases(model, t)
    inner = (V.conj().T @ full @ V) * phase[:, None] * phase.conj()[None, :]
    return LocalOperator(model.region.sites, model.dims, V @ inner @ V.conj().T)


def evolve_many(model, A, times):
    """tau_t(A) for every t, sharing the eigenbasis transform"""
    model.require_dense("Heisenberg evolution")
    full = embed(A, model.region, dict(zip(model.region.sites, model.dims))).matrix
    V = model.eigenvectors
    rotated = V.conj().T @ full @ V
    out = []
    for t in times:
        phase = _phases(model, t)
        inner = rotated * phase[:, None] * phase.conj()[None, :]
        out.append(LocalOperator(model.region.sites, model.dims, V @ inner @ V.conj().T))
    return out


def commutator_profile(model, A, B):
    """t -> ||[tau_t(A), B]||, evaluated in the eigenbasis where the norm is unchanged"""
    model.require_dense("Heisenberg evolution")
    dim_of = dict(zip(model.region.sites, model.dims))
    V = model.eigenvectors
    a = V.conj().T @ embed(A, model.region, dim_of).matrix @ V
    b = V.conj().T @ embed(B, model.region, dim_of).matrix @ V

    def norm_at(t):
        phase = _phases(model, t)
        at = a * phase[:, None] * phase.conj()[None, :]
        return operator_norm(at @ b - b @ at)

    return norm_at


def commutator_norms(model, A, B, times, jobs=None):
    return np.array(parallel_map(commutator_profile(model, A, B), times, jobs))


def commutator_norm(model, A, B, t):
    return float(commutator_norms(model, A, B, [t])[0])


def gaussian_smooth(model, op, alpha, generator=None):
    """sqrt(alpha/pi) int tau_t(op) e^{-alpha t^2} dt with tau generated by `generator`.

    Closed form: in the generator's eigenbasis entry (i, j) is damped by e^{-(E_i-E_j)^2/(4 alpha)}.
    The result lives on the union of op's support and the generator's region.
    """
    if alpha <= 0:
        raise DomainError(f"smoothing parameter must be positive, got {alpha}")
    generator = generator or model
    generator.require_dense("Gaussian smoothing")
    gen_sites = list(generator.region.sites)
    dim_of = dict(zip(model.region.sites, model.dims))
    dim_of.update(zip(gen_sites, generator.dims))
    sites = sorted(set(op.support) | set(gen_sites))
    rest = [s for s in sites if s not in set(gen_sites)]
    work = embed(op, sites, {s: dim_of[s] for s in sites})
    order = gen_sites + rest
    n = len(order)
    perm = [sites.index(s) for s in order]
    dg, dr = generator.dim, prod(dim_of[s] for s in rest)
    T = work.matrix.reshape([dim_of[s] for s in sites] * 2).transpose(perm + [n + p for p in perm])
    T = T.reshape(dg, dr, dg, dr)
    V = generator.eigenvectors
    E = generator.eigenvalues
    rotated = np.einsum("pi,pajb,jq->iaqb", V.conj(), T, V, optimize=True)
    damping = np.exp(-((E[:, None] - E[None, :]) ** 2) / (4.0 * alpha))
    rotated = rotated * damping[:, None, :, None]
    back = np.einsum("pi,iaqb,jq->pajb", V, rotated, V.conj(), optimize=True)
    inverse = [order.index(s) for s in sites]
    size = dg * dr
    back = back.reshape([dim_of[s] for s in order] * 2).transpose(inverse + [n + p for p in inverse])
    return LocalOperator(tuple(sites), tuple(dim_of[s] for s in sites), back.reshape(size, size))


def ground_projector(model):
    """Orthogonal projection onto the ground cluster"""
    model.require_dense("the ground projector")
    G = model.ground_vectors
    return LocalOperator(model.region.sites, model.dims, G @ G.conj().T)
