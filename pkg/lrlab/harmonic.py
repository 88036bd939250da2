"""
lrlab Harmonic Lattice
Weyl-operator dynamics of coupled harmonic oscillators on the torus (-L, L]^d and on Z^d:
dispersion, the kernel triple behind T_t, a classical phase-space oracle, the Bogoliubov
identities, the vacuum state and the locality bounds on [tau_t(W(f)), W(g)]
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import product
from math import ceil, log

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.integrate import nquad
from scipy.signal import fftconvolve

from lrlab.errors import DomainError, ResourceError
from lrlab.lattice import DecayFunction, SiteSet
from lrlab.lrbounds import EPS_NUM, BoundReport
from lrlab.parallel import parallel_map
from lrlab.quantum import operator_norm

logger = logging.getLogger(__name__)

QUAD_TOL = 1e-9
QUAD_BUDGET = 10**7
ORACLE_CAP = 4096
BOGOLIUBOV_CAP = 2048
EPSILON = 0.5
RATE_GRID = tuple(np.round(np.linspace(0.05, 3.0, 296), 10))
TRUNCATION_RATES = (0.5, 1.0, 2.0, 3.0)
MAX_RADIUS = 256


@dataclass(frozen=True)
class HarmonicLattice:
    """H = sum_x p_x^2 + omega^2 q_x^2 + sum_j lam_j (q_x - q_{x+e_j})^2 on (-L, L]^d, or on Z^d when L is None"""

    d: int
    omega: float
    lam: tuple
    L: int = None

    def __post_init__(self):
        lam = self.lam
        if np.ndim(lam) == 0:
            lam = (float(lam),) * self.d
        lam = tuple(float(x) for x in lam)
        if self.d < 1:
            raise DomainError(f"dimension must be positive, got {self.d}")
        if len(lam) != self.d:
            raise DomainError(f"{len(lam)} couplings for dimension {self.d}")
        if self.omega <= 0:
            raise DomainError(f"on-site frequency must be positive, got {self.omega} (the massless case is not supported)")
        if any(x < 0 for x in lam):
            raise DomainError(f"couplings must be nonnegative, got {lam}")
        if self.L is not None and self.L < 1:
            raise DomainError(f"torus half-width must be positive, got {self.L}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def finite(self):
        return self.L is not None

    @property
    def c(self):
        """c_{omega,lambda} = (omega^2 + 4 sum_j lam_j)^(1/2)"""
        return float(np.sqrt(self.omega**2 + 4.0 * sum(self.lam)))

    @property
    def n(self):
        return 2 * self.L

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def volume(self):
        return self.n**self.d

    @property
    def origin(self):
        return (-self.L + 1,) * self.d

    def sites(self):
        self._require_finite()
        return SiteSet.torus(self.L, self.d)

    def with_volume(self, L):
        return HarmonicLattice(self.d, self.omega, self.lam, L)

    def _require_finite(self):
        if not self.finite:
            raise DomainError("this operation needs a finite volume (set L)")


def dispersion(lattice, k):
    """gamma(k) = sqrt(omega^2 + 4 sum_j lam_j sin^2(k_j / 2)); k has a trailing axis of length d (or is scalar in d = 1)"""
    k = np.asarray(k, dtype=float)
    if lattice.d == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        k = k[..., None]
    lam = np.asarray(lattice.lam)
    return np.sqrt(lattice.omega**2 + 4.0 * np.sum(lam * np.sin(k / 2.0) ** 2, axis=-1))


def _fft_dispersion(lattice):
    """gamma on the dual lattice in FFT index order, k_j = pi m_j / L"""
    axes = [2.0 * np.pi * np.fft.fftfreq(lattice.n)] * lattice.d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return dispersion(lattice, grid)


def _to_fft_order(a, L):
    return np.roll(a, -(L - 1), axis=tuple(range(a.ndim)))


def _from_fft_order(a, L):
    return np.roll(a, L - 1, axis=tuple(range(a.ndim)))


# Site functions

@dataclass(frozen=True, eq=False)
class SiteFunction:
    """Complex function on lattice sites: values[i] sits at origin + i.

    Finite-volume functions cover the whole torus (origin (-L+1, ..., -L+1), shape (2L,)^d);
    infinite-volume functions cover a bounding box of their support.
    """

    values: np.ndarray = field(repr=False)
    origin: tuple
    L: int = None

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        origin = tuple(int(c) for c in self.origin)
        if values.ndim != len(origin):
            raise DomainError(f"values of rank {values.ndim} with a {len(origin)}-dimensional origin")
        if self.L is not None:
            if values.shape != (2 * self.L,) * values.ndim or origin != (-self.L + 1,) * values.ndim:
                raise DomainError(f"finite-volume function must cover (-{self.L}, {self.L}]^{values.ndim}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def zeros(cls, lattice):
        if lattice.finite:
            return cls(np.zeros(lattice.shape), lattice.origin, lattice.L)
        return cls(np.zeros((1,) * lattice.d), (0,) * lattice.d)

    @classmethod
    def from_dict(cls, lattice, mapping):
        """Function with the given site -> value entries (sites as ints in d = 1 or tuples)"""
        items = {(_site(x, lattice.d)): complex(v) for x, v in mapping.items()}
        if lattice.finite:
            values = np.zeros(lattice.shape, dtype=complex)
            for x, v in items.items():
                if any(not -lattice.L < c <= lattice.L for c in x):
                    raise DomainError(f"site {x} is outside the torus")
                values[tuple(c - o for c, o in zip(x, lattice.origin))] += v
            return cls(values, lattice.origin, lattice.L)
        if not items:
            return cls.zeros(lattice)
        coords = np.array(list(items))
        low, high = coords.min(axis=0), coords.max(axis=0)
        values = np.zeros(tuple(high - low + 1), dtype=complex)
        for x, v in items.items():
            values[tuple(np.array(x) - low)] += v
        return cls(values, tuple(low), None)

    @classmethod
    def delta(cls, lattice, site, value=1.0):
        return cls.from_dict(lattice, {site: value})

    @property
    def d(self):
        return self.values.ndim

    @property
    def finite(self):
        return self.L is not None

    def support(self):
        """(sites, values) of the nonzero entries"""
        idx = np.argwhere(self.values != 0)
        return idx + np.array(self.origin), self.values[tuple(idx.T)]

    def at(self, x):
        x = _site(x, self.d)
        if self.finite:
            x = tuple((c + self.L - 1) % (2 * self.L) - self.L + 1 for c in x)
        i = tuple(c - o for c, o in zip(x, self.origin))
        if any(j < 0 or j >= s for j, s in zip(i, self.values.shape)):
            return 0j
        return complex(self.values[i])

    @property
    def norm1(self):
        return float(np.sum(np.abs(self.values)))

    @property
    def norm2(self):
        return float(np.linalg.norm(self.values))

    def conj(self):
        return SiteFunction(self.values.conj(), self.origin, self.L)

    def _aligned(self, other):
        if self.finite or other.finite:
            if self.L != other.L or self.d != other.d:
                raise DomainError("site functions live on different volumes")
            return self.values, other.values, self.origin
        low = np.minimum(self.origin, other.origin)
        high = np.maximum(np.add(self.origin, self.values.shape), np.add(other.origin, other.values.shape))
        out = []
        for f in (self, other):
            box = np.zeros(tuple(high - low), dtype=complex)
            start = np.subtract(f.origin, low)
            box[tuple(slice(s, s + n) for s, n in zip(start, f.values.shape))] = f.values
            out.append(box)
        return out[0], out[1], tuple(low)

    def inner(self, other):
        """<self, other> = sum_x conj(self(x)) other(x)"""
        a, b, _ = self._aligned(other)
        return complex(np.vdot(a, b))

    def __add__(self, other):
        a, b, origin = self._aligned(other)
        return SiteFunction(a + b, origin, self.L)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return SiteFunction(scalar * self.values, self.origin, self.L)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def restricted(self, radius):
        """Entries with |x|_inf <= radius, as an infinite-volume function"""
        shape = (2 * radius + 1,) * self.d
        values = np.array([self.at(x) for x in product(range(-radius, radius + 1), repeat=self.d)])
        return SiteFunction(values.reshape(shape), (-radius,) * self.d, None)

    def to_real(self):
        """Phase-space vector (Re f, Im f), sites in lexicographic order"""
        return np.concatenate([self.values.real.ravel(), self.values.imag.ravel()])

    @classmethod
    def from_real(cls, vector, lattice):
        half = len(vector) // 2
        values = (vector[:half] + 1j * vector[half:]).reshape(lattice.shape)
        return cls(values, lattice.origin, lattice.L)


def _site(x, d):
    x = (int(x),) if np.ndim(x) == 0 else tuple(int(c) for c in x)
    if len(x) != d:
        raise DomainError(f"site {x} is not {d}-dimensional")
    return x


# Kernels

@dataclass(frozen=True, eq=False)
class KernelTriple:
    """Real kernels (h^-1, h^0, h^1) at time t on a grid starting at `origin`"""

    t: float
    h_minus1: np.ndarray = field(repr=False)
    h_0: np.ndarray = field(repr=False)
    h_plus1: np.ndarray = field(repr=False)
    origin: tuple = ()

    @property
    def shape(self):
        return self.h_0.shape

    def sites(self):
        ranges = [range(o, o + n) for o, n in zip(self.origin, self.shape)]
        return list(product(*ranges))

    def linear_part(self):
        """Kernel convolved with f: h^0 - i (h^-1 + h^1) / 2"""
        return self.h_0 - 0.5j * (self.h_minus1 + self.h_plus1)

    def conjugate_part(self):
        """Kernel convolved with conj(f): i (h^1 - h^-1) / 2"""
        return 0.5j * (self.h_plus1 - self.h_minus1)

    def to_frame(self):
        sites = self.sites()
        x = [s[0] for s in sites] if len(self.origin) == 1 else [",".join(map(str, s)) for s in sites]
        return pd.DataFrame({
            "t": self.t,
            "x": x,
            "h_minus1": self.h_minus1.ravel(),
            "h_0": self.h_0.ravel(),
            "h_plus1": self.h_plus1.ravel(),
        })


def kernels_finite(lattice, t):
    """The three discrete Fourier sums over the dual torus, in grid order"""
    lattice._require_finite()
    gamma = _fft_dispersion(lattice)
    phase = np.exp(-2j * gamma * t)
    # ifftn carries the 1/|Lambda_L| normalization and the e^{+ikx} sign
    s_minus = np.fft.ifftn(phase / gamma)
    s_zero = np.fft.ifftn(phase)
    s_plus = np.fft.ifftn(phase * gamma)
    return KernelTriple(
        float(t),
        _from_fft_order(s_minus.imag, lattice.L),
        _from_fft_order(s_zero.real, lattice.L),
        _from_fft_order(s_plus.imag, lattice.L),
        lattice.origin,
    )


def kernels_infinite(d, omega, lam, t, x, tol=QUAD_TOL, budget=QUAD_BUDGET):
    """(H^-1, H^0, H^1) at site x by adaptive quadrature over the Brillouin zone.

    Evenness in each k_j folds [-pi, pi)^d onto [0, pi]^d.
    """
    if tol <= 0:
        raise DomainError(f"quadrature tolerance must be positive, got {tol}")
    lattice = HarmonicLattice(d, omega, lam)
    x = np.array(_site(x, d), dtype=float)
    lam_arr = np.asarray(lattice.lam)
    scale = np.pi**d
    evaluations = 0

    def gamma_of(k):
        return np.sqrt(lattice.omega**2 + 4.0 * np.sum(lam_arr * np.sin(np.asarray(k) / 2.0) ** 2))

    def integrand(weight):
        def f(*k):
            nonlocal evaluations
            evaluations += 1
            if evaluations > budget:
                raise ResourceError(f"quadrature exceeded {budget} integrand evaluations")
            g = gamma_of(k)
            return np.prod(np.cos(np.asarray(k) * x)) * weight(g)
        return f

    weights = (
        lambda g: -np.sin(2.0 * g * t) / g,
        lambda g: np.cos(2.0 * g * t),
        lambda g: -np.sin(2.0 * g * t) * g,
    )
    opts = {"epsabs": tol * scale, "epsrel": 0.0, "limit": 200}
    values = []
    for weight in weights:
        value, error = nquad(integrand(weight), [(0.0, np.pi)] * d, opts=[opts] * d)
        if error > tol * scale:
            raise ResourceError(f"quadrature error {error / scale:.3g} above tolerance {tol} at x = {tuple(x)}")
        values.append(value / scale)
    return tuple(values)


def truncation_radius(lattice, t, tol=QUAD_TOL):
    """Radius beyond which every kernel entry is below tol, from the pointwise kernel decay bounds"""
    best = None
    for mu in TRUNCATION_RATES:
        prefactor = max(1.0, 1.0 / lattice.c, lattice.c * np.exp(mu / 2.0))
        radius = harmonic_velocity(lattice, mu) * abs(t) + log(prefactor / tol) / mu
        best = radius if best is None else min(best, radius)
    radius = int(ceil(best))
    if radius > MAX_RADIUS:
        raise ResourceError(f"truncation radius {radius} above {MAX_RADIUS}")
    return radius


def kernels_infinite_grid(lattice, t, radius=None, tol=QUAD_TOL, jobs=None):
    """Infinite-volume kernels on the box |x|_inf <= radius; entries computed on the positive orthant and reflected"""
    radius = truncation_radius(lattice, t, tol) if radius is None else radius
    orthant = list(product(range(radius + 1), repeat=lattice.d))

    def evaluate(x):
        return kernels_infinite(lattice.d, lattice.omega, lattice.lam, t, x, tol)

    values = parallel_map(evaluate, orthant, jobs, desc="   kernels" if len(orthant) > 64 else None)
    side = 2 * radius + 1
    grids = [np.zeros((side,) * lattice.d) for _ in range(3)]
    for x, triple in zip(orthant, values):
        for signs in product((1, -1), repeat=lattice.d):
            idx = tuple(radius + s * c for s, c in zip(signs, x))
            for grid, value in zip(grids, triple):
                grid[idx] = value
    logger.debug(f"infinite-volume kernels at t={t}: radius {radius}, {len(orthant)} quadratures")
    return KernelTriple(float(t), *grids, origin=(-radius,) * lattice.d)


class SymplecticPropagator:
    """T_t as convolution with a kernel triple, on the torus or on Z^d"""

    def __init__(self, lattice, t, tol=QUAD_TOL, jobs=None):
        self.lattice = lattice
        self.t = float(t)
        if lattice.finite:
            self.kernels = kernels_finite(lattice, t)
        else:
            self.kernels = kernels_infinite_grid(lattice, t, tol=tol, jobs=jobs)

    @cached_property
    def _fft_parts(self):
        L = self.lattice.L
        return (np.fft.fftn(_to_fft_order(self.kernels.linear_part(), L)),
                np.fft.fftn(_to_fft_order(self.kernels.conjugate_part(), L)))

    def __call__(self, f):
        if f.d != self.lattice.d:
            raise DomainError(f"{f.d}-dimensional function for a {self.lattice.d}-dimensional lattice")
        if self.lattice.finite:
            if f.L != self.lattice.L:
                raise DomainError(f"function lives on L={f.L}, propagator on L={self.lattice.L}")
            L = self.lattice.L
            linear, conjugate = self._fft_parts
            a = _to_fft_order(f.values, L)
            out = np.fft.ifftn(np.fft.fftn(a) * linear + np.fft.fftn(a.conj()) * conjugate)
            return SiteFunction(_from_fft_order(out, L), f.origin, L)
        if f.finite:
            raise DomainError("finite-volume function passed to an infinite-volume propagator")
        values = (fftconvolve(f.values, self.kernels.linear_part())
                  + fftconvolve(f.values.conj(), self.kernels.conjugate_part()))
        origin = tuple(o + k for o, k in zip(f.origin, self.kernels.origin))
        return SiteFunction(values, origin, None)


def apply_Tt(lattice, f, t):
    """T_t f = f * (h^0 - i(h^-1 + h^1)/2) + conj(f) * (i(h^1 - h^-1)/2)"""
    return SymplecticPropagator(lattice, t)(f)


# Phase-space oracle

def stiffness_matrix(lattice):
    """Omega^2 = omega^2 I + sum_j lam_j (2 - S_j - S_j^-1) with S_j the periodic shift along axis j"""
    lattice._require_finite()
    N = lattice.volume
    idx = np.arange(N).reshape(lattice.shape)
    K = lattice.omega**2 * np.eye(N)
    for j, lam in enumerate(lattice.lam):
        shifted = np.roll(idx, -1, axis=j).ravel()
        P = np.zeros((N, N))
        P[np.arange(N), shifted] = 1.0
        K += lam * (2.0 * np.eye(N) - P - P.T)
    return K


def symplectic_oracle(lattice, f, t):
    """Evolve (Re f, Im f) under q' = 2p, p' = -2 Omega^2 q by a dense matrix exponential"""
    lattice._require_finite()
    N = lattice.volume
    if N > ORACLE_CAP:
        raise ResourceError(f"volume {N} above the oracle cap {ORACLE_CAP}")
    K = stiffness_matrix(lattice)
    zero, eye = np.zeros((N, N)), np.eye(N)
    generator = np.block([[zero, -2.0 * K], [2.0 * eye, zero]])
    flow = scipy.linalg.expm(t * generator)
    return SiteFunction.from_real(flow @ f.to_real(), lattice)


# Bogoliubov transformation

def _circulant(lattice, multiplier):
    """F^-1 M F as a dense real matrix on the torus sites"""
    kernel = np.fft.ifftn(multiplier).real
    coords = np.array(lattice.sites().sites)
    diff = (coords[:, None, :] - coords[None, :, :]) % lattice.n
    return kernel[tuple(diff[..., j] for j in range(lattice.d))]


def _linear_real(M):
    return np.block([[M.real, -M.imag], [M.imag, M.real]])


def _antilinear_real(M):
    """Real representation of f -> M conj(f)"""
    return np.block([[M.real, M.imag], [M.imag, -M.real]])


@lru_cache(maxsize=16)
def bogoliubov_maps(lattice):
    """Real 2N x 2N representations of U = (i/2) F^-1 M_{Gamma+} F and V = (i/2) F^-1 M_{Gamma-} F J"""
    lattice._require_finite()
    if lattice.volume > BOGOLIUBOV_CAP:
        raise ResourceError(f"volume {lattice.volume} above the cap {BOGOLIUBOV_CAP}")
    gamma = _fft_dispersion(lattice)
    root = np.sqrt(gamma)
    plus = _circulant(lattice, 1.0 / root + root)
    minus = _circulant(lattice, 1.0 / root - root)
    U = _linear_real(0.5j * plus)
    V = _antilinear_real(0.5j * minus)
    return U, V


def bogoliubov_residuals(lattice):
    """(||U*U - V*V - 1||, ||V*U - U*V||), each maximized with its UU* / VU* counterpart"""
    U, V = bogoliubov_maps(lattice)
    eye = np.eye(U.shape[0])
    r1 = max(operator_norm(U.T @ U - V.T @ V - eye), operator_norm(U @ U.T - V @ V.T - eye))
    r2 = max(operator_norm(V.T @ U - U.T @ V), operator_norm(V @ U.T - U @ V.T))
    return float(r1), float(r2)


def vacuum_weyl_expectation(lattice, fs):
    """rho(W(f_1) ... W(f_n)) in the harmonic ground state"""
    if not fs:
        return 1.0 + 0.0j
    total = fs[0]
    phase = 0.0
    for f in fs[1:]:
        phase -= 0.5 * total.inner(f).imag
        total = total + f
    U, V = bogoliubov_maps(lattice)
    shifted = (U.T - V.T) @ total.to_real()
    return complex(np.exp(1j * phase) * np.exp(-0.25 * float(shifted @ shifted)))


# Bounds

def weyl_commutator_norm(lattice, f, g, t, propagator=None):
    """||[tau_t(W(f)), W(g)]|| = 2 |sin(Im<T_t f, g> / 2)|"""
    propagator = propagator or SymplecticPropagator(lattice, t)
    return float(2.0 * abs(np.sin(propagator(f).inner(g).imag / 2.0)))


def overlap_proxy(lattice, f, g, t, propagator=None):
    """sum_y |T_t f(y)| |g(y)|, the bound on |Im<T_t f, g>| used by the locality estimates"""
    propagator = propagator or SymplecticPropagator(lattice, t)
    a, b, _ = propagator(f)._aligned(g)
    return float(np.sum(np.abs(a) * np.abs(b)))


def harmonic_velocity(lattice, mu):
    """v_h(mu) = c max(2/mu, e^{mu/2 + 1})"""
    if mu <= 0:
        raise DomainError(f"decay rate must be positive, got {mu}")
    return lattice.c * max(2.0 / mu, np.exp(mu / 2.0 + 1.0))


def lemma_constant(lattice, mu):
    """1 + c e^{mu/2} + 1/c"""
    return 1.0 + lattice.c * np.exp(mu / 2.0) + 1.0 / lattice.c


def optimal_rate(lattice, grid=RATE_GRID):
    """(mu_0, v_h(mu_0)) minimizing the velocity over the grid"""
    velocities = [harmonic_velocity(lattice, mu) for mu in grid]
    i = int(np.argmin(velocities))
    return float(grid[i]), float(velocities[i])


def _pair_distances(lattice, f, g, metric):
    xs, fv = f.support()
    ys, gv = g.support()
    if len(xs) == 0 or len(ys) == 0:
        return None, None
    diff = np.abs(xs[:, None, :] - ys[None, :, :])
    if metric == "torus":
        diff = np.minimum(diff % lattice.n, lattice.n - diff % lattice.n)
    weights = np.abs(fv)[:, None] * np.abs(gv)[None, :]
    return diff.sum(axis=-1), weights


def harmonic_bound(lattice, f, g, t, mu):
    """C sum_{x,y} |f(x)| |g(y)| e^{-mu (d(x,y) - v_h(mu) |t|)} with the torus metric"""
    lattice._require_finite()
    dist, weights = _pair_distances(lattice, f, g, "torus")
    if dist is None:
        return 0.0
    v = harmonic_velocity(lattice, mu)
    return float(lemma_constant(lattice, mu) * np.sum(weights * np.exp(-mu * (dist - v * abs(t)))))


def _sup_polynomial_weight(epsilon, d):
    """sup_{s >= 0} e^{-epsilon s} (1+s)^(d+1)"""
    s = (d + 1) / epsilon - 1.0
    if s <= 0:
        return 1.0
    return float(np.exp(-epsilon * s) * (1.0 + s) ** (d + 1))


def corollary_constant(lattice, mu, epsilon=EPSILON):
    """C(epsilon, mu) = (1 + c e^{(mu+epsilon)/2} + 1/c) sup_s e^{-epsilon s} (1+s)^(d+1)"""
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    return lemma_constant(lattice, mu + epsilon) * _sup_polynomial_weight(epsilon, lattice.d)


def decay_sum(lattice, f, g, mu, metric=None):
    """sum_{x,y} |f(x)| |g(y)| F_mu(d(x,y)); torus metric on finite volumes, |x - y| otherwise"""
    metric = metric or ("torus" if lattice.finite else "l1")
    dist, weights = _pair_distances(lattice, f, g, metric)
    if dist is None:
        return 0.0
    return float(np.sum(weights * DecayFunction.exp_power(mu, lattice.d)(dist)))


def _decay_form(lattice, f, g, t, mu, epsilon, metric):
    rate = mu + epsilon
    growth = np.exp(rate * harmonic_velocity(lattice, rate) * abs(t))
    return float(corollary_constant(lattice, mu, epsilon) * growth * decay_sum(lattice, f, g, mu, metric))


def corollary_bound(lattice, f, g, t, mu, epsilon=EPSILON):
    """C(epsilon, mu) e^{(mu+epsilon) v_h(mu+epsilon) |t|} sum |f(x)| |g(y)| F_mu(d(x,y)), torus metric"""
    lattice._require_finite()
    return _decay_form(lattice, f, g, t, mu, epsilon, "torus")


def infinite_harmonic_bound(lattice, f, g, t, mu, epsilon=EPSILON):
    """Same form on Z^d with d(x,y) = |x - y|"""
    return _decay_form(lattice, f, g, t, mu, epsilon, "l1")


def infinite_constants(lattice, mu, epsilon=EPSILON):
    """(c, v) of the infinite-volume bound"""
    rate = mu + epsilon
    return corollary_constant(lattice, mu, epsilon), rate * harmonic_velocity(lattice, rate)


@dataclass
class KernelDecayReport:
    """Pointwise kernel magnitudes against the exponential decay envelopes"""

    t: float
    mu: float
    sites: list
    excess: np.ndarray
    tol: float = 1e-10

    @property
    def max_excess(self):
        return float(np.max(self.excess)) if len(self.sites) else 0.0

    @property
    def worst_site(self):
        row = int(np.argmax(self.excess.max(axis=1)))
        return tuple(self.sites[row])

    @property
    def passed(self):
        return self.max_excess <= self.tol

    def to_frame(self):
        return pd.DataFrame({
            "t": self.t,
            "mu": self.mu,
            "x": [",".join(map(str, s)) for s in self.sites],
            "excess_minus1": self.excess[:, 0],
            "excess_0": self.excess[:, 1],
            "excess_plus1": self.excess[:, 2],
        })

    def summary(self):
        return {
            "t": self.t,
            "mu": self.mu,
            "max_excess": self.max_excess,
            "worst_site": list(self.worst_site),
            "passed": self.passed,
        }


def kernel_decay_check(lattice, t, mu, kernels=None, tol=1e-10):
    """|h^0|, c|h^-1|, |h^1| / (c e^{mu/2}) against e^{-mu(|x| - v_h(mu)|t|)} at every site"""
    kernels = kernels or (kernels_finite(lattice, t) if lattice.finite else kernels_infinite_grid(lattice, t))
    sites = kernels.sites()
    norms = np.array([sum(abs(c) for c in s) for s in sites], dtype=float)
    envelope = np.exp(-mu * (norms - harmonic_velocity(lattice, mu) * abs(t)))
    scales = (1.0 / lattice.c, 1.0, lattice.c * np.exp(mu / 2.0))
    arrays = (kernels.h_minus1, kernels.h_0, kernels.h_plus1)
    excess = np.stack([np.abs(a.ravel()) - s * envelope for a, s in zip(arrays, scales)], axis=1)
    report = KernelDecayReport(float(t), float(mu), sites, excess, tol)
    logger.debug(f"kernel decay t={t} mu={mu}: max excess {report.max_excess:.3g}")
    return report


def verify_harmonic(lattice, f, g, t_grid, mu, eps_num=EPS_NUM, form="theorem", epsilon=EPSILON, jobs=None):
    """Exact Weyl commutator norms against the harmonic locality bound over a time grid"""
    t_grid = np.asarray(t_grid, dtype=float)

    def point(t):
        propagator = SymplecticPropagator(lattice, t)
        measured = weyl_commutator_norm(lattice, f, g, t, propagator)
        if form == "theorem":
            bound = harmonic_bound(lattice, f, g, t, mu)
        elif form == "corollary":
            bound = corollary_bound(lattice, f, g, t, mu, epsilon)
        elif form == "infinite":
            bound = infinite_harmonic_bound(lattice, f, g, t, mu, epsilon)
        else:
            raise DomainError(f"unknown bound form {form!r}")
        return measured, bound

    rows = parallel_map(point, t_grid, jobs, desc="   harmonic sweep" if len(t_grid) > 20 else None)
    measured, bound = (np.array(col) for col in zip(*rows)) if rows else (np.array([]), np.array([]))
    label = "f|g"
    return BoundReport(t_grid, [label] * len(t_grid), measured, bound, eps_num, form)
