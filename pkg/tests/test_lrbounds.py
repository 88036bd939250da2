import numpy as np
import pytest

from lrlab import models
from lrlab.errors import DomainError, ResourceError
from lrlab.lattice import DecayFunction, SiteSet, convolution_constant_exact
from lrlab.lrbounds import (
    BoundReport,
    Interaction,
    best_velocity,
    d_factor,
    interaction_norm,
    lr_bound,
    lr_velocity,
    phi_boundary,
    series_coefficient,
    series_coefficient_bound,
    verify_lr,
)
from lrlab.quantum import LocalOperator, assemble

F1 = DecayFunction.power(1)


def sites(*xs):
    return [(x,) for x in xs]


def test_interaction_rejects_bad_terms():
    S = SiteSet.path(3)
    with pytest.raises(DomainError):
        Interaction(S, {((0,), (1,)): models.sigma_z(0)})
    with pytest.raises(DomainError):
        Interaction(S, {((0,),): LocalOperator.on([0], np.array([[0, 1], [0, 0]]), 2)})
    with pytest.raises(DomainError):
        Interaction(S, {((7,),): models.sigma_z(7)})


def test_interaction_norm_examples(path5, ising5):
    assert interaction_norm(Interaction(path5), F1) == 0.0
    assert np.isclose(interaction_norm(ising5, F1), 4.0)
    assert np.isclose(interaction_norm(ising5, DecayFunction.exp_power(1.0, 1)), 4 * np.e)


def test_phi_boundary_examples():
    S = SiteSet.path(8)
    phi = models.ising(S)
    assert phi_boundary(phi, sites(2, 3, 4, 5)) == tuple(sites(2, 5))
    assert phi_boundary(phi, sites(0, 1, 2, 3)) == tuple(sites(3))
    assert phi_boundary(phi, S.sites) == ()
    assert phi_boundary(Interaction(S), sites(2, 3)) == ()


def test_d_factor_examples(path5, ising5):
    assert d_factor(Interaction(path5), F1, sites(0), sites(4)) == 0.0
    assert np.isclose(d_factor(ising5, F1, sites(0), sites(4)), 1 / 25)
    X, Y = sites(0, 1), sites(3, 4)
    assert np.isclose(d_factor(ising5, F1, X, Y), d_factor(ising5, F1, Y, X))
    with pytest.raises(DomainError):
        d_factor(ising5, F1, sites(0, 1), sites(1, 2))


def test_lr_bound_zero_time_and_scaling(path5, ising5):
    C = convolution_constant_exact(path5, F1)
    X, Y = sites(0), sites(4)
    assert lr_bound(ising5, F1, C, X, Y, 1.0, 1.0, 0.0) == 0.0
    one = lr_bound(ising5, F1, C, X, Y, 1.0, 1.0, 0.5)
    assert np.isclose(lr_bound(ising5, F1, C, X, Y, 2.0, 1.0, 0.5), 2 * one)


def test_lr_bound_recomputed_by_hand(path5, ising5):
    D = path5.distance_matrix
    Fm = (1.0 + D) ** -2.0
    C = max((Fm[i] * Fm[:, j]).sum() / Fm[i, j] for i in range(5) for j in range(5))
    expected = 2.0 / C * (np.exp(2 * C * 4.0 * 0.5) - 1.0) / 25.0
    assert np.isclose(lr_bound(ising5, F1, C, sites(0), sites(4), 1.0, 1.0, 0.5), expected, rtol=1e-12)


def test_lr_bound_monotone(path5, ising5):
    C = convolution_constant_exact(path5, F1)
    values = [lr_bound(ising5, F1, C, sites(0), sites(3), 1.0, 1.0, t) for t in np.linspace(0, 2, 9)]
    assert np.all(np.diff(values) > 0)
    stronger = models.ising(path5, J=2.0)
    assert lr_bound(stronger, F1, C, sites(0), sites(3), 1.0, 1.0, 0.3) > values[1]
    assert lr_bound(ising5, F1, C, sites(0), sites(3), 1.0, 1.0, -0.5) == lr_bound(
        ising5, F1, C, sites(0), sites(3), 1.0, 1.0, 0.5)


def test_lr_velocity(path5, ising5):
    F_mu = DecayFunction.exp_power(1.0, 1)
    C_mu = convolution_constant_exact(path5, F_mu)
    assert lr_velocity(Interaction(path5), F_mu, C_mu, 1.0) == 0.0
    assert np.isclose(lr_velocity(ising5, F_mu, C_mu, 1.0), 2 * 4 * np.e * C_mu)
    with pytest.raises(DomainError):
        lr_velocity(ising5, F_mu, C_mu, 0.0)


def test_best_velocity_grid(ising5):
    mu, v, table = best_velocity(ising5)
    assert list(table["mu"]) == [0.25, 0.5, 1.0, 2.0]
    assert np.all(np.isfinite(table["velocity"])) and np.all(table["velocity"] > 0)
    assert v == table["velocity"].min()
    assert mu in (0.25, 0.5, 1.0, 2.0)


def test_series_coefficients(path5, ising5):
    assert series_coefficient(Interaction(path5), sites(0), sites(2), 1) == 0.0
    assert series_coefficient(ising5, sites(0), sites(2), 1) == 0.0
    assert series_coefficient(ising5, sites(0), sites(2), 2) == 1.0


def test_series_coefficients_below_proof_bound(path5):
    C = convolution_constant_exact(path5, F1)
    for phi in (models.ising(path5), models.heisenberg(path5, J=0.7)):
        for X, Y in [(sites(0), sites(2)), (sites(0), sites(4)), (sites(1, 2), sites(4))]:
            for n in (1, 2, 3):
                a_n = series_coefficient(phi, X, Y, n)
                assert a_n <= series_coefficient_bound(phi, F1, C, X, Y, n) + 1e-12


def test_series_coefficient_caps(ising5):
    with pytest.raises(ResourceError):
        series_coefficient(ising5, sites(0), sites(2), 4)
    with pytest.raises(ResourceError):
        series_coefficient(models.ising(SiteSet.path(9)), sites(0), sites(2), 2)
    with pytest.raises(ResourceError):
        series_coefficient(ising5, sites(0), sites(4), 3, budget=2)


def test_bound_report_recomputes_pass():
    report = BoundReport([0.0, 1.0], ["a", "a"], [0.0, 0.5], [0.0, 1.0])
    assert report.passed
    report.measured = np.array([0.0, 1.5])
    assert not report.passed
    frame = report.to_frame()
    assert list(frame.columns) == ["t", "pair", "measured", "bound", "margin", "pass"]
    with pytest.raises(DomainError):
        BoundReport([0.0], ["a", "b"], [0.0], [0.0])


def test_verify_lr_at_zero(path5, ising5):
    model = assemble(ising5, [], path5)
    report = verify_lr(model, ising5, F1, models.sigma_z(0), models.sigma_z(4), [0.0])
    assert report.passed
    assert report.measured[0] < 1e-12 and report.bound[0] == 0.0


@pytest.mark.slow
def test_verify_lr_heisenberg_sweep():
    S = SiteSet.path(8)
    phi = models.heisenberg(S, spin=0.5)
    model = assemble(phi, [], S)
    grid = np.round(np.arange(41) * 0.05, 10)
    far = verify_lr(model, phi, F1, models.sigma_z(0), models.sigma_z(7), grid)
    assert far.passed
    assert far.summary()["n_points"] == 41
    near = verify_lr(model, phi, F1, models.sigma_z(0), models.sigma_z(1), grid)
    assert near.passed
    assert near.measured[10] > far.measured[10]


def test_verify_lr_exponential_form():
    S = SiteSet.path(6)
    phi, field = models.tfim(S, h=0.5, field_in_interaction=True)
    model = assemble(phi, [], S)
    grid = np.linspace(0, 1.5, 7)
    report = verify_lr(model, phi, DecayFunction.power(1), models.sigma_z(0), models.sigma_z(5), grid,
                       form="exponential", mu=1.0)
    assert report.passed
    assert report.summary()["form"] == "exponential"


def test_periodic_chain_closes_at_distance_one():
    ring = models.ising(SiteSet.path(5), periodic=True)
    assert ring.sites.kind == "ring"
    assert ((0,), (4,)) in ring.terms and len(ring) == 5
    assert np.isclose(interaction_norm(ring, F1), 4.0)
    assert phi_boundary(ring, sites(0, 1)) == tuple(sites(0, 1))
    assert np.isclose(d_factor(ring, F1, sites(0), sites(4)), 1 / 4)
    with pytest.raises(DomainError):
        models.ising(SiteSet(sites(0, 1, 3)), periodic=True)
