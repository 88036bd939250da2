"""
lrlab Anharmonic Perturbations
Even atomic measures defining Weyl perturbations V_x and V_X, their moments kappa and kappa_mu,
and the locality bounds of the perturbed harmonic dynamics (finite volume, multi-site, Z^d)
"""

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lrlab.errors import DomainError
from lrlab.harmonic import (
    EPSILON,
    HarmonicLattice,
    corollary_constant,
    decay_sum,
    harmonic_velocity,
)
from lrlab.lattice import DecayFunction, SiteSet, sufficient_convolution_constant, zd_convolution_constant

logger = logging.getLogger(__name__)

PAIRING_DIGITS = 12
# largest log value np.exp keeps finite
LOG_MAX = float(np.log(np.finfo(float).max))


def _as_site(x):
    return (int(x),) if np.ndim(x) == 0 else tuple(int(c) for c in x)


def _check_even(atoms, where):
    """Every atom (z, w) must be matched by (-z, w)"""
    def key(z, w):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return tuple(np.round(z.real, PAIRING_DIGITS) + 0.0) + tuple(np.round(z.imag, PAIRING_DIGITS) + 0.0), round(w, PAIRING_DIGITS)

    counts = Counter(key(z, w) for z, w in atoms)
    for z, w in atoms:
        if w <= 0:
            raise DomainError(f"{where}: atom weight {w} is not positive")
        if counts[key(z, w)] != counts[key(-np.asarray(z), w)]:
            raise DomainError(f"{where}: atom {z} has no mirror atom at {-np.asarray(z)}; the measure must be even")


@dataclass(frozen=True)
class SiteMeasure:
    """mu_x = sum_j w_j delta_{z_j}, even under z -> -z; V_x = sum_j w_j W(z_j delta_x)"""

    site: tuple
    atoms: tuple

    def __post_init__(self):
        atoms = tuple((complex(z), float(w)) for z, w in self.atoms)
        _check_even(atoms, f"measure at {self.site}")
        object.__setattr__(self, "site", _as_site(self.site))
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def cosine(cls, site, z, w=1.0):
        """Atoms at +z and -z: V_x = 2w cos(alpha q_x + beta p_x) for z = alpha + i beta"""
        return cls(site, ((z, w), (-z, w)))

    @property
    def mass(self):
        return sum(w for _, w in self.atoms)

    @property
    def first_moment(self):
        """int |z| |mu_x|(dz)"""
        return sum(w * abs(z) for z, w in self.atoms)

    @property
    def second_moment(self):
        """int |z|^2 |mu_x|(dz)"""
        return sum(w * abs(z) ** 2 for z, w in self.atoms)

    def lift(self):
        return MultiSiteMeasure((self.site,), tuple(((z,), w) for z, w in self.atoms))

    def to_dict(self):
        return {"site": list(self.site),
                "atoms": [{"re": z.real, "im": z.imag, "w": w} for z, w in self.atoms]}


@dataclass(frozen=True)
class MultiSiteMeasure:
    """mu_X on C^X as atoms (z vector over the support, weight), even under z -> -z"""

    support: tuple
    atoms: tuple

    def __post_init__(self):
        support = tuple(_as_site(x) for x in self.support)
        if len(set(support)) != len(support):
            raise DomainError(f"repeated sites in support {support}")
        atoms = []
        for z, w in self.atoms:
            z = tuple(complex(c) for c in np.atleast_1d(z))
            if len(z) != len(support):
                raise DomainError(f"atom of length {len(z)} on a support of {len(support)} sites")
            atoms.append((z, float(w)))
        atoms = tuple(atoms)
        _check_even(atoms, f"measure on {support}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "atoms", atoms)

    def pair_moment(self, i, j):
        """int |z_i| |z_j| |mu_X|(dz) for support positions i, j"""
        return sum(w * abs(z[i]) * abs(z[j]) for z, w in self.atoms)

    def to_dict(self):
        return {"sites": [list(x) for x in self.support],
                "atoms": [{"re": [c.real for c in z], "im": [c.imag for c in z], "w": w} for z, w in self.atoms]}


def measures_to_json(measures):
    return json.dumps([m.to_dict() for m in measures], sort_keys=True, indent=2)


def measures_from_json(text):
    """Inverse of measures_to_json; evenness is re-validated on construction"""
    out = []
    for item in json.loads(text):
        if "site" in item:
            atoms = [(complex(a["re"], a["im"]), a["w"]) for a in item["atoms"]]
            out.append(SiteMeasure(tuple(item["site"]), tuple(atoms)))
        else:
            atoms = [(tuple(complex(r, i) for r, i in zip(a["re"], a["im"])), a["w"]) for a in item["atoms"]]
            out.append(MultiSiteMeasure(tuple(tuple(s) for s in item["sites"]), tuple(atoms)))
    return out


def load_measures(path):
    return measures_from_json(Path(path).read_text())


def kappa(measures):
    """max over sites of int |z|^2 |mu_x|(dz); measures sharing a site are added"""
    per_site = defaultdict(float)
    for m in measures:
        per_site[m.site] += m.second_moment
    return max(per_site.values(), default=0.0)


def kappa_mu(multi, F_mu, sites=None):
    """Smallest kappa_mu with sum_{X containing x, y} int |z_x||z_y| |mu_X| <= kappa_mu F_mu(d(x,y)).

    Returns (kappa_mu, finite). `sites` supplies the metric; by default the l1 metric on the union
    of the supports.
    """
    if not multi:
        return 0.0, True
    if sites is None:
        sites = SiteSet(tuple({x for m in multi for x in m.support}))
    pair_sums = defaultdict(float)
    for m in multi:
        for i, x in enumerate(m.support):
            for j, y in enumerate(m.support):
                pair_sums[(x, y)] += m.pair_moment(i, j)
    value = max(total / F_mu(sites.distance(x, y)) for (x, y), total in pair_sums.items())
    return float(value), bool(np.isfinite(value))


def convolution_constant_for(lattice):
    """C_d = 2^(d+1) sum_z (1+|z|)^-(d+1), over the torus for finite volumes and over Z^d otherwise"""
    if lattice.finite:
        return sufficient_convolution_constant(lattice.sites(), DecayFunction.power(lattice.d))
    return zd_convolution_constant(lattice.d)


def _constants(lattice, mu, epsilon):
    if mu <= 0 or epsilon <= 0:
        raise DomainError(f"mu and epsilon must be positive, got {mu}, {epsilon}")
    rate = mu + epsilon
    return corollary_constant(lattice, mu, epsilon), rate * harmonic_velocity(lattice, rate)


def _log_form(c, rate, t, decay, what):
    """log(c e^{rate |t|} decay); -inf when decay vanishes"""
    if decay <= 0.0:
        return -np.inf
    value = float(np.log(c) + rate * abs(t) + np.log(decay))
    if value > LOG_MAX:
        logger.warning(f"{what} at t={t} is e^{value:.4g}, beyond float range")
    return value


def _from_log(value):
    return float(np.exp(value)) if value <= LOG_MAX else np.inf


def anharmonic_log_bound(lattice, measures, f, g, t, mu, epsilon=EPSILON, C_d=None):
    """log of anharmonic_bound, finite where the bound itself overflows"""
    c, v = _constants(lattice, mu, epsilon)
    C_d = convolution_constant_for(lattice) if C_d is None else C_d
    rate = v + c * kappa(measures) * C_d
    return _log_form(c, rate, t, decay_sum(lattice, f, g, mu), "anharmonic bound")


def anharmonic_bound(lattice, measures, f, g, t, mu, epsilon=EPSILON, C_d=None):
    """c e^{(v + c kappa C_d)|t|} sum |f(x)||g(y)| F_mu(d(x,y)), c = C(epsilon, mu), v = (mu+epsilon) v_h(mu+epsilon)"""
    return _from_log(anharmonic_log_bound(lattice, measures, f, g, t, mu, epsilon, C_d))


def multisite_log_bound(lattice, multi, f, g, t, mu, epsilon=EPSILON, mu1=None, C_d=None):
    """log of multisite_bound; the C_d^2 exponent overflows doubles already at moderate t"""
    if mu1 is not None and mu > mu1:
        raise DomainError(f"mu = {mu} is above the range mu <= {mu1} where kappa_mu is certified")
    c, v = _constants(lattice, mu, epsilon)
    metric = lattice.sites() if lattice.finite else None
    k_mu, ok = kappa_mu(multi, DecayFunction.exp_power(mu, lattice.d), metric)
    if not ok:
        raise DomainError("the multi-site perturbation has no finite kappa_mu")
    C_d = convolution_constant_for(lattice) if C_d is None else C_d
    rate = v + c * k_mu * C_d**2
    return _log_form(c, rate, t, decay_sum(lattice, f, g, mu), "multi-site bound")


def multisite_bound(lattice, multi, f, g, t, mu, epsilon=EPSILON, mu1=None, C_d=None):
    """As anharmonic_bound with kappa_mu C_d^2 in the exponent; inf past float range"""
    return _from_log(multisite_log_bound(lattice, multi, f, g, t, mu, epsilon, mu1, C_d))


def _infinite(lattice):
    return lattice if not lattice.finite else HarmonicLattice(lattice.d, lattice.omega, lattice.lam)


def infinite_volume_bound(lattice, measures, f, g, t, mu, epsilon=EPSILON):
    """anharmonic_bound on Z^d: |x - y| metric and the Z^d convolution constant"""
    return anharmonic_bound(_infinite(lattice), measures, f, g, t, mu, epsilon)


def infinite_volume_tail(lattice, measures, f, t, mu, inner, outer, epsilon=EPSILON):
    """Bound on ||tau^outer_t(W(f)) - tau^inner_t(W(f))||:

    sum over x in outer \\ inner of c (e^{r|t|} - 1)/r sum_y |f(y)| F_mu(|y - x|) int |z| |mu_x|(dz),
    with r = v + c kappa C_d on Z^d.
    """
    lattice = _infinite(lattice)
    c, v = _constants(lattice, mu, epsilon)
    rate = v + c * kappa(measures) * zd_convolution_constant(lattice.d)
    growth = np.expm1(rate * abs(t)) / rate
    inner = {_as_site(x) for x in inner}
    first = defaultdict(float)
    for m in measures:
        first[m.site] += m.first_moment
    xs, fv = f.support()
    F_mu = DecayFunction.exp_power(mu, lattice.d)
    total = 0.0
    for x in {_as_site(x) for x in outer} - inner:
        if first[x] == 0.0 or len(xs) == 0:
            continue
        dist = np.abs(xs - np.array(x)).sum(axis=1)
        total += float(np.sum(np.abs(fv) * F_mu(dist))) * first[x]
    logger.debug(f"infinite-volume tail at t={t}: {c * growth * total:.3g}")
    return float(c * growth * total)
