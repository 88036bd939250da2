import numpy as np
import pytest

from lrlab import models
from lrlab.clustering import (
    CorrelationSeries,
    clustering_certificate,
    clustering_rate_bound,
    fit_decay,
    harmonic_clustering,
    harmonic_gap,
    truncated_correlation,
    verify_clustering,
)
from lrlab.errors import DomainError
from lrlab.harmonic import HarmonicLattice, SiteFunction
from lrlab.lattice import DecayFunction, SiteSet
from lrlab.lrbounds import Interaction, interaction_norm
from lrlab.quantum import LocalOperator, assemble

from conftest import random_operator


def tfim_model(n, h, **kwargs):
    S = SiteSet.path(n)
    phi, field = models.tfim(S, J=1.0, h=h)
    return phi, assemble(phi, field, S, **kwargs)


def test_fit_decay_exact_exponential():
    d = np.arange(1, 8)
    fit = fit_decay(d, 3.0 * np.exp(-0.7 * d))
    assert np.isclose(fit.rate, 0.7) and np.isclose(fit.log_prefactor, np.log(3.0))
    assert fit.residual < 1e-12 and fit.rate_stderr < 1e-10
    assert fit.n_points == 7


def test_fit_decay_floor():
    assert fit_decay([1, 2, 3], [1e-3, 1e-14, 0.0]) is None
    fit = fit_decay([1, 2, 3, 4], [1e-2, 1e-4, 1e-14, 0.0])
    assert fit.n_points == 2 and np.isclose(fit.rate, np.log(100))


def test_series_requires_increasing_distances():
    with pytest.raises(DomainError):
        CorrelationSeries([2, 1], [0.1, 0.2])
    frame = CorrelationSeries([1, 2, 3], [0.1, 0.01j, 0.001]).to_frame(0.5)
    assert list(frame.columns) == ["distance", "re", "im", "abs", "fitted", "theorem_mu"]


def test_truncated_correlation_trivial_cases():
    phi, model = tfim_model(6, 1.5)
    A = models.sigma_z(0)
    assert abs(truncated_correlation(model, A, LocalOperator.identity([3], 2))) < 1e-12
    S = SiteSet.path(6)
    product_model = assemble(Interaction(S), models.onsite_terms(S, -models.SIGMA_X + 0.3 * models.SIGMA_Z, 2), S)
    assert abs(truncated_correlation(product_model, A, models.sigma_z(3))) < 1e-12


def test_truncated_correlation_degenerate_ground_state():
    S = SiteSet.path(4)
    model = assemble(models.ising(S), [], S)
    with pytest.raises(DomainError, match="degenerate"):
        truncated_correlation(model, models.sigma_z(0), models.sigma_z(3))


def test_truncated_correlation_symmetry_and_bound(rng):
    _, model = tfim_model(6, 1.5)
    for _ in range(3):
        A = random_operator(rng, [(0,), (1,)], hermitian=False)
        B = random_operator(rng, [(4,)], hermitian=False)
        value = truncated_correlation(model, A, B)
        mirror = truncated_correlation(model, B.adjoint(), A.adjoint())
        assert abs(value - np.conj(mirror)) < 1e-12
        assert abs(value) <= 2 * A.norm * B.norm


def test_clustering_rate_bound_examples():
    assert np.isclose(clustering_rate_bound(1.0, 1.0, 1.0), 0.2)
    assert abs(clustering_rate_bound(1.0, 1e9, 1.0) - 1.0) < 1e-6
    with pytest.raises(DomainError):
        clustering_rate_bound(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        clustering_rate_bound(1.0, -1.0, 1.0)


def test_certificate_recomputed():
    phi, model = tfim_model(6, 2.0)
    a, phi_a, mu, table = clustering_certificate(phi, model.gap)
    recomputed = [x * model.gap / (model.gap + 4 * interaction_norm(phi, DecayFunction.exp_power(x, 1)))
                  for x in table["a"]]
    assert np.allclose(table["mu"], recomputed)
    assert mu == max(recomputed)
    assert np.isclose(phi_a, 4 * np.exp(a))


def test_uncoupled_model_passes_trivially():
    S = SiteSet.path(6)
    model = assemble(Interaction(S), models.onsite_terms(S, -models.SIGMA_X, 2), S)
    report = verify_clustering(model, Interaction(S), models.sigma_z(0), models.sigma_z(0), [1, 2, 3, 4])
    assert report.trivial and report.passed
    assert report.summary()["status"] == "pass"


def test_gapped_tfim_clusters_faster_than_certificate():
    phi, model = tfim_model(8, 2.0)
    report = verify_clustering(model, phi, models.sigma_z(1), models.sigma_z(1), [1, 2, 3, 4, 5])
    assert list(report.series.distances) == [1, 2, 3, 4, 5]
    assert report.passed and report.status == "pass"
    assert report.series.fit.rate > report.mu_theorem > 0
    assert report.boundary == 1


@pytest.mark.slow
def test_tfim_twelve_sites():
    phi, model = tfim_model(12, 2.0, dense_cap=256)
    assert not model.dense
    report = verify_clustering(model, phi, models.sigma_z(1), models.sigma_z(1), range(1, 10))
    assert report.passed and report.series.fit.rate > report.mu_theorem


def test_critical_chain_is_vacuous():
    phi, model = tfim_model(8, 1.0)
    report = verify_clustering(model, phi, models.sigma_z(1), models.sigma_z(1), [1, 2, 3, 4, 5])
    assert report.vacuous
    assert report.status in ("vacuous", "inconclusive")


def test_harmonic_clustering_zero_function():
    lattice = HarmonicLattice(1, 2.0, 1.0, 16)
    report = harmonic_clustering(lattice, SiteFunction.delta(lattice, 0), SiteFunction.zeros(lattice), range(1, 6))
    assert np.all(np.abs(report.series.values) < 1e-15)
    assert report.trivial and report.passed


def test_harmonic_clustering_rates():
    rates = {}
    for omega in (2.0, 8.0):
        lattice = HarmonicLattice(1, omega, 1.0, 16)
        delta = SiteFunction.delta(lattice, 0)
        report = harmonic_clustering(lattice, delta, delta, range(1, 13))
        assert report.passed
        assert report.series.fit.rate > 0
        rates[omega] = report.series.fit.rate
    assert rates[8.0] > rates[2.0]
    assert harmonic_gap(HarmonicLattice(1, 2.0, 1.0, 16)) == 4.0
