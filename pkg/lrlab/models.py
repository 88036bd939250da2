"""
lrlab Models
Spin matrices and interaction recipes: transverse-field Ising, Heisenberg, Ising bonds on
paths, rings and boxes
"""

import numpy as np

from lrlab.errors import DomainError
from lrlab.lattice import SiteSet
from lrlab.lrbounds import Interaction
from lrlab.quantum import LocalOperator

# Pauli matrices, basis (up, down)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def spin_matrices(spin):
    """(S^1, S^2, S^3) for spin 1/2 or 1, basis m = s, s-1, ..., -s"""
    if spin == 0.5:
        return tuple(0.5 * s for s in PAULI)
    if spin == 1:
        raise_ = np.sqrt(2.0) * np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
        lower = raise_.conj().T
        sx = 0.5 * (raise_ + lower)
        sy = -0.5j * (raise_ - lower)
        sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
        return sx, sy, sz
    raise DomainError(f"spin {spin} not supported")


def local_dim(spin):
    return int(round(2 * spin + 1))


def spin_dot(spin):
    """S.S on two sites"""
    return sum(np.kron(s, s) for s in spin_matrices(spin))


def closed(S):
    """The path S as a ring, so the closing bond sits at distance 1"""
    if S.kind == "ring":
        return S
    if S.dim != 1 or len(S) < 3:
        raise DomainError("periodic closing bond needs a path of at least 3 sites")
    if S.sites[-1][0] - S.sites[0][0] != len(S) - 1:
        raise DomainError("periodic closing bond needs a contiguous path")
    return SiteSet(S.sites, kind="ring", L=len(S), dim=1)


def nearest_neighbor_pairs(S, periodic=False):
    """Pairs at distance 1; with periodic the path is closed into a ring first"""
    S = closed(S) if periodic else S
    return [(x, y) for i, x in enumerate(S.sites) for y in S.sites[i + 1:] if S.distance(x, y) == 1]


def bond_interaction(S, bond, dim, periodic=False):
    """Interaction with the same two-site `bond` on every nearest-neighbor pair"""
    S = closed(S) if periodic else S
    terms = {}
    for x, y in nearest_neighbor_pairs(S, periodic):
        terms[(x, y)] = LocalOperator((x, y), dim, bond)
    return Interaction(S, terms)


def onsite_terms(S, matrix, dim):
    return [LocalOperator((x,), dim, matrix) for x in S]


def ising(S, J=1.0, periodic=False):
    """Bonds -J sigma^3 sigma^3 and no field"""
    return bond_interaction(S, -J * np.kron(SIGMA_Z, SIGMA_Z), 2, periodic)


def tfim(S, J=1.0, h=1.0, periodic=False, field_in_interaction=False):
    """Transverse-field Ising chain: bonds -J sigma^3 sigma^3, field -h sigma^1.

    Returns (interaction, onsite). With field_in_interaction the field is stored as
    single-site interaction terms instead of onsite terms.
    """
    phi = ising(S, J, periodic)
    field = onsite_terms(S, -h * SIGMA_X, 2)
    if field_in_interaction:
        return Interaction(phi.sites, {**phi.terms, **{op.support: op for op in field}}), []
    return phi, field


def heisenberg(S, J=1.0, spin=0.5, periodic=False):
    """Bonds J S.S"""
    return bond_interaction(S, J * spin_dot(spin), local_dim(spin), periodic)


def single_site(site, matrix):
    site = tuple(site) if np.ndim(site) else (int(site),)
    return LocalOperator((site,), matrix.shape[0], matrix)


def sigma_z(site):
    return single_site(site, SIGMA_Z)


def chain(n, start=0):
    return SiteSet.path(n, start)
