import numpy as np
import pytest

from lrlab import models
from lrlab.errors import DomainError
from lrlab.lattice import DecayFunction, SiteSet, convolution_constant_exact
from lrlab.lrbounds import interaction_norm
from lrlab.quantum import LocalOperator, assemble
from lrlab.thermolimit import (
    NOISE_FLOOR,
    VolumeSequence,
    dyson_remainder_bound,
    dyson_truncation,
    harmonic_volume_convergence,
    volume_convergence,
    volume_tail_bound,
)


def tfim_recipe(S):
    return models.tfim(S, J=1.0, h=0.8)


@pytest.fixture
def small_sequence():
    return VolumeSequence.centered_chains((3, 5, 7), tfim_recipe)


def test_volume_sequence_validation():
    with pytest.raises(DomainError):
        VolumeSequence((SiteSet.path(3), SiteSet.path(3)), tfim_recipe)
    with pytest.raises(DomainError):
        VolumeSequence((SiteSet.path(3, start=5), SiteSet.path(5)), tfim_recipe)
    with pytest.raises(DomainError):
        VolumeSequence.centered_chains((3, 5), lambda S: models.tfim(S, J=len(S)))


def test_identity_and_zero_time(small_sequence):
    identity = LocalOperator.identity([0], 2)
    table = volume_convergence(small_sequence, identity, 1.0, points=8, max_refinements=1)
    assert np.all(table["delta"] < 1e-12)
    table = volume_convergence(small_sequence, models.sigma_z(0), 0.0)
    assert np.all(table["delta"] < 1e-12)
    assert np.all(table["tail_bound"] == 0.0)


def test_observable_must_sit_in_smallest_volume(small_sequence):
    with pytest.raises(DomainError):
        volume_convergence(small_sequence, models.sigma_z(2), 1.0)


def test_tail_bound_recomputed(small_sequence):
    A = models.sigma_z(0)
    S = small_sequence.largest
    F = DecayFunction.power(1)
    C = convolution_constant_exact(S, F)
    phi_norm = interaction_norm(small_sequence.interactions[-1][0], F, S)
    t = 0.7
    k = 2 * phi_norm * C
    expected = 2 * phi_norm * (np.expm1(k * t) / k - t) * 2 * F(2)
    assert np.isclose(volume_tail_bound(small_sequence, A, 0, 1, t), expected, rtol=1e-12)
    assert volume_tail_bound(small_sequence, A, 1, 2, t) < volume_tail_bound(small_sequence, A, 0, 1, t)


def test_differences_below_tail_and_decreasing(small_sequence):
    table = volume_convergence(small_sequence, models.sigma_z(0), 1.0, points=16, max_refinements=1)
    assert list(table.columns) == ["n", "m", "delta", "tail_bound", "pass", "refinements"]
    assert list(table["n"]) == [3, 5] and list(table["m"]) == [5, 7]
    assert table["pass"].all()
    assert table["delta"].iloc[1] < table["delta"].iloc[0]
    assert table["delta"].iloc[0] > 0


@pytest.mark.slow
def test_volume_convergence_acceptance():
    seq = VolumeSequence.centered_chains((5, 7, 9, 11), tfim_recipe)
    table = volume_convergence(seq, models.sigma_z(0), 1.0)
    assert table["pass"].all()
    assert np.all(np.diff(table["delta"]) < 0)


def test_harmonic_volume_convergence_zero_time():
    table = harmonic_volume_convergence(1, 1.0, 1.0, {0: 1.0}, 0.0, Ls=(8, 16))
    assert np.all(table["difference"] < 1e-8)
    assert not table["wraparound"].any()


def test_harmonic_volume_convergence_non_increasing():
    table = harmonic_volume_convergence(1, 1.0, 1.0, {0: 1.0}, 1.0)
    assert list(table["L"]) == [8, 16, 32, 64]
    diffs = table["difference"].to_numpy()
    assert np.all(np.diff(diffs) <= NOISE_FLOOR)
    assert diffs[-1] <= 1e-6
    assert not table["wraparound"].any()


def test_harmonic_volume_convergence_visible_finite_size():
    table = harmonic_volume_convergence(1, 1.0, 1.0, {0: 1.0}, 6.0, Ls=(4, 32))
    small, large = table["difference"]
    assert small > 1e-6
    assert large < small
    assert list(table["wraparound"]) == [True, False]


def test_harmonic_wraparound_flagged():
    table = harmonic_volume_convergence(1, 1.0, 1.0, {0: 1.0}, 10.0, Ls=(8,))
    assert table["wraparound"].iloc[0]


def test_dyson_remainder_bound_values():
    assert dyson_remainder_bound(0.0, 1.0, 1.0, 0) == 0.0
    assert np.isclose(dyson_remainder_bound(0.3, 2.0, 0.5, 1), 0.3**2 / 2 * 2.0 * np.exp(0.3))


def test_dyson_zero_perturbation():
    S = SiteSet.path(3)
    phi, field = models.tfim(S, h=0.5)
    H0 = assemble(phi, field, S)
    V = models.single_site((1,), np.zeros((2, 2)))
    report = dyson_truncation(H0, V, models.sigma_z(0), 0.8, 3)
    assert report.remainders[0] < 1e-12
    assert np.all(report.term_norms[1:] < 1e-12)


def test_dyson_commuting_case():
    S = SiteSet.path(4)
    H0 = assemble(models.ising(S), [], S)
    V = 0.3 * models.sigma_z(2)
    report = dyson_truncation(H0, V, models.sigma_z(0), 0.5, 3)
    assert np.all(report.term_norms[1:] < 1e-12)
    assert np.all(report.remainders < 1e-12)


def test_dyson_series_converges_within_bound():
    S = SiteSet.path(4)
    phi, field = models.tfim(S, h=0.6)
    H0 = assemble(phi, field, S)
    V = 0.3 * models.single_site((1,), models.SIGMA_X)
    report = dyson_truncation(H0, V, models.sigma_z(0), 0.5, 5)
    assert report.passed
    assert np.all(np.diff(report.remainders) < 0)
    assert report.remainders[-1] < 1e-3 * report.remainders[0]
    frame = report.to_frame()
    assert list(frame["order"]) == list(range(6))
    assert report.summary()["n_max"] == 5
