"""
lrlab Lattice
Finite site sets (paths, boxes, tori, rings), the decay functions F and F_mu, and their constants
"""

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from math import comb, factorial

import numpy as np

from lrlab.errors import DomainError, ResourceError

logger = logging.getLogger(__name__)

# Work budget for the exhaustive triple loop (|S|^3 terms)
DEFAULT_TRIPLE_BUDGET = 10**4

METRIC_KINDS = ("box", "torus", "ring")


def torus_distance(x, y, L):
    """Distance on the torus (-L, L]^d: sum over coordinates of min_eta |x_j - y_j + 2L eta|"""
    x = tuple(int(c) for c in x)
    y = tuple(int(c) for c in y)
    if len(x) != len(y):
        raise DomainError(f"dimension mismatch: {x} vs {y}")
    for c in x + y:
        if not -L < c <= L:
            raise DomainError(f"coordinate {c} outside (-{L}, {L}]")
    period = 2 * L
    total = 0
    for a, b in zip(x, y):
        r = abs(a - b) % period
        total += min(r, period - r)
    return total


def l1_norm(x):
    return sum(abs(int(c)) for c in x)


@dataclass(frozen=True)
class SiteSet:
    """Finite set of lattice sites with an integer metric.

    kind "box" uses the l1 (graph) metric of Z^d, which is the graph metric of any box,
    path or sub-box; kind "torus" uses the torus metric on (-L, L]^d; kind "ring" is a
    periodic path of L sites. Sites are kept in lexicographic order, which fixes the
    tensor-product ordering everywhere.
    """

    sites: tuple
    kind: str = "box"
    L: int = None
    dim: int = None

    def __post_init__(self):
        sites = tuple(sorted({tuple(int(c) for c in s) for s in self.sites}))
        dims = {len(s) for s in sites}
        if len(dims) > 1:
            raise DomainError(f"sites of mixed dimension: {sorted(dims)}")
        dim = self.dim if self.dim is not None else (dims.pop() if dims else 1)
        if sites and len(sites[0]) != dim:
            raise DomainError(f"sites have dimension {len(sites[0])}, declared {dim}")
        if self.kind not in METRIC_KINDS:
            raise DomainError(f"unknown metric kind {self.kind!r}")
        if self.kind == "torus":
            if self.L is None or self.L < 1:
                raise DomainError("torus needs a positive half-width L")
            for s in sites:
                if any(not -self.L < c <= self.L for c in s):
                    raise DomainError(f"site {s} outside the torus (-{self.L}, {self.L}]^{dim}")
        if self.kind == "ring":
            if dim != 1 or self.L is None or self.L < 3:
                raise DomainError("ring needs a one-dimensional period L of at least 3")
            if sites and sites[-1][0] - sites[0][0] >= self.L:
                raise DomainError(f"sites span more than the ring period {self.L}")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "dim", dim)

    # Constructors

    @classmethod
    def path(cls, n, start=0):
        """Path {start, ..., start + n - 1} in Z"""
        if n < 1:
            raise DomainError(f"path length must be positive, got {n}")
        return cls(tuple((start + i,) for i in range(n)), dim=1)

    @classmethod
    def centered_path(cls, n):
        """Path of odd length n centered on the origin"""
        if n < 1 or n % 2 == 0:
            raise DomainError(f"centered path needs odd positive length, got {n}")
        return cls.path(n, start=-(n // 2))

    @classmethod
    def box(cls, shape, origin=None):
        """Box prod_j {o_j, ..., o_j + n_j - 1} in Z^d (e.g. shape (2, n) for a ladder)"""
        origin = origin or (0,) * len(shape)
        ranges = [range(o, o + n) for o, n in zip(origin, shape)]
        return cls(tuple(product(*ranges)), dim=len(shape))

    @classmethod
    def torus(cls, L, d=1):
        """The cube (-L, L]^d with periodic metric"""
        ranges = [range(-L + 1, L + 1)] * d
        return cls(tuple(product(*ranges)), kind="torus", L=L, dim=d)

    @classmethod
    def ring(cls, n, start=0):
        """Path {start, ..., start + n - 1} closed into a cycle of length n"""
        return cls(tuple((start + i,) for i in range(n)), kind="ring", L=n, dim=1)

    def subset(self, sites):
        """Subset carrying the same metric"""
        sites = tuple(tuple(int(c) for c in s) for s in sites)
        missing = [s for s in sites if s not in self]
        if missing:
            raise DomainError(f"sites {missing[:3]} are not in the site set")
        return SiteSet(sites, kind=self.kind, L=self.L, dim=self.dim)

    def union(self, other):
        return SiteSet(self.sites + tuple(other), kind=self.kind, L=self.L, dim=self.dim)

    def difference(self, other):
        drop = set(other)
        return SiteSet(tuple(s for s in self.sites if s not in drop), kind=self.kind, L=self.L, dim=self.dim)

    def intersection(self, other):
        keep = set(other)
        return SiteSet(tuple(s for s in self.sites if s in keep), kind=self.kind, L=self.L, dim=self.dim)

    # Container protocol

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site):
        return tuple(site) in self._positions

    @cached_property
    def _positions(self):
        return {s: i for i, s in enumerate(self.sites)}

    def index(self, site):
        try:
            return self._positions[tuple(site)]
        except KeyError:
            raise DomainError(f"site {tuple(site)} is not in the site set") from None

    def issubset(self, other):
        return all(s in other for s in self.sites)

    # Metric

    def distance(self, x, y):
        if self.kind == "torus":
            return torus_distance(x, y, self.L)
        if self.kind == "ring":
            r = abs(x[0] - y[0]) % self.L
            return min(r, self.L - r)
        return sum(abs(a - b) for a, b in zip(x, y))

    @cached_property
    def distance_matrix(self):
        """Integer matrix of pairwise distances in site order"""
        coords = np.array(self.sites, dtype=np.int64).reshape(len(self), self.dim)
        diff = np.abs(coords[:, None, :] - coords[None, :, :])
        if self.kind in ("torus", "ring"):
            period = 2 * self.L if self.kind == "torus" else self.L
            diff = diff % period
            diff = np.minimum(diff, period - diff)
        return diff.sum(axis=-1)

    def set_distance(self, X, Y):
        """min over x in X, y in Y of d(x, y)"""
        X, Y = list(X), list(Y)
        if not X or not Y:
            raise DomainError("distance to an empty set is undefined")
        return min(self.distance(x, y) for x in X for y in Y)

    # Serialization

    def to_json(self):
        return json.dumps({"dim": self.dim, "kind": self.kind, "L": self.L,
                           "sites": [list(s) for s in self.sites]})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(tuple(tuple(s) for s in data["sites"]), kind=data["kind"], L=data["L"], dim=data["dim"])


@dataclass(frozen=True)
class DecayFunction:
    """F(r) = (1+r)^-(d+1) ("power") or F_mu(r) = e^(-mu r)(1+r)^-(d+1) ("exp-power")"""

    kind: str
    d: int
    mu: float = 0.0

    def __post_init__(self):
        if self.kind not in ("power", "exp-power"):
            raise DomainError(f"unknown decay kind {self.kind!r}")
        if self.d < 1:
            raise DomainError(f"dimension must be positive, got {self.d}")
        if self.mu < 0:
            raise DomainError(f"decay rate must be nonnegative, got {self.mu}")
        if self.kind == "power" and self.mu != 0:
            raise DomainError("power decay takes no rate")

    @classmethod
    def power(cls, d):
        return cls("power", d)

    @classmethod
    def exp_power(cls, mu, d):
        return cls("exp-power", d, float(mu))

    def with_rate(self, mu):
        return DecayFunction.exp_power(mu, self.d)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("decay function evaluated at a negative distance")
        value = (1.0 + r) ** (-(self.d + 1))
        if self.kind == "exp-power":
            value = value * np.exp(-self.mu * r)
        return value if value.ndim else float(value)


def decay_value(F, r):
    return F(r)


def convolution_constant_exact(S, F, budget=DEFAULT_TRIPLE_BUDGET):
    """max over (x, y) of sum_z F(d(x,z)) F(d(z,y)) / F(d(x,y)), exhaustively"""
    n = len(S)
    if n == 0:
        raise DomainError("convolution constant of an empty site set")
    if n**3 > budget:
        raise ResourceError(f"{n}^3 = {n**3} triples exceeds the budget of {budget}")
    Fm = F(S.distance_matrix)
    convolved = Fm @ Fm
    return float(np.max(convolved / Fm))


def uniform_integral(S, F):
    """sup over x of sum_y F(d(x, y))"""
    if len(S) == 0:
        raise DomainError("uniform integral over an empty site set")
    return float(np.max(F(S.distance_matrix).sum(axis=1)))


def sufficient_convolution_constant(S, F):
    """2^(d+1) sum_{x in S} F(|x|) with |x| the l1 norm of the coordinates"""
    norms = np.array([l1_norm(s) for s in S])
    return float(2 ** (F.d + 1) * np.sum(F(norms)))


def shell_count(r, d):
    """Number of points of Z^d at l1 distance r from the origin"""
    if r == 0:
        return 1
    return sum(2**k * comb(d, k) * comb(r - 1, k - 1) for k in range(1, min(d, r) + 1))


def zd_convolution_constant(d, radius=20000):
    """C_d = 2^(d+1) sum_{z in Z^d} (1+|z|)^-(d+1), an upper estimate.

    Exact in d = 1; in higher dimension the series is summed to `radius` and the tail is
    replaced by the bound 2^d d^(d-1) / ((d-1)! (radius+1)).
    """
    if d == 1:
        return 4.0 * (np.pi**2 / 3.0 - 1.0)
    r = np.arange(radius + 1)
    counts = np.array([shell_count(int(k), d) for k in r], dtype=float)
    head = float(np.sum(counts * (1.0 + r) ** (-(d + 1))))
    tail = 2**d * d ** (d - 1) / (factorial(d - 1) * (radius + 1))
    logger.debug(f"C_{d}: head {head:.12g}, tail bound {tail:.3g}")
    return 2 ** (d + 1) * (head + tail)
