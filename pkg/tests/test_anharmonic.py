import json

import numpy as np
import pytest

from lrlab.anharmonic import (
    LOG_MAX,
    MultiSiteMeasure,
    SiteMeasure,
    anharmonic_bound,
    anharmonic_log_bound,
    convolution_constant_for,
    infinite_volume_bound,
    infinite_volume_tail,
    kappa,
    kappa_mu,
    load_measures,
    measures_from_json,
    measures_to_json,
    multisite_bound,
    multisite_log_bound,
)
from lrlab.errors import DomainError
from lrlab.harmonic import HarmonicLattice, SiteFunction, corollary_bound, corollary_constant, decay_sum
from lrlab.lattice import DecayFunction, zd_convolution_constant


@pytest.fixture
def lattice():
    return HarmonicLattice(1, 1.0, 1.0, 12)


@pytest.fixture
def fg(lattice):
    return SiteFunction.delta(lattice, 0), SiteFunction.from_dict(lattice, {5: 1.0, 6: 0.5j})


def test_measure_must_be_even():
    with pytest.raises(DomainError):
        SiteMeasure(0, ((1 + 1j, 1.0),))
    with pytest.raises(DomainError):
        SiteMeasure(0, ((1.0, 1.0), (-1.0, 2.0)))
    with pytest.raises(DomainError):
        SiteMeasure(0, ((1.0, -1.0), (-1.0, -1.0)))
    SiteMeasure(0, ((0.0, 3.0),))
    with pytest.raises(DomainError):
        MultiSiteMeasure(((0,), (1,)), (((1.0, 2.0), 1.0), ((-1.0, 2.0), 1.0)))


def test_kappa_examples():
    assert kappa([]) == 0.0
    assert np.isclose(kappa([SiteMeasure.cosine(0, 1 + 1j)]), 4.0)
    measures = [
        SiteMeasure.cosine(0, 0.5),
        SiteMeasure.cosine(1, 2.0, w=0.25),
        SiteMeasure.cosine(1, 1j, w=0.5),
        SiteMeasure.cosine(3, 0.1 + 0.2j),
    ]
    per_site = {0: 2 * 0.25, 1: 2 * 0.25 * 4 + 2 * 0.5, 3: 2 * 0.05}
    assert np.isclose(kappa(measures), max(per_site.values()))


def test_kappa_mu_examples():
    F = DecayFunction.exp_power(0.7, 1)
    assert kappa_mu([], F) == (0.0, True)
    single = [SiteMeasure.cosine(0, 1 + 1j), SiteMeasure.cosine(2, 0.5)]
    value, ok = kappa_mu([m.lift() for m in single], F)
    assert ok and np.isclose(value, kappa(single))
    z0, z1, w = 0.8, 0.5j, 0.3
    pair = MultiSiteMeasure(((0,), (1,)), (((z0, z1), w), ((-z0, -z1), w)))
    value, ok = kappa_mu([pair], F)
    expected = max(2 * w * abs(z0) ** 2, 2 * w * abs(z1) ** 2, 2 * w * abs(z0) * abs(z1) / F(1))
    assert ok and np.isclose(value, expected)


def test_zero_perturbation_is_harmonic_bound(lattice, fg):
    f, g = fg
    for t in (0.0, 0.4, 1.2):
        assert np.isclose(anharmonic_bound(lattice, [], f, g, t, 1.0), corollary_bound(lattice, f, g, t, 1.0))
        assert np.isclose(multisite_bound(lattice, [], f, g, t, 1.0), corollary_bound(lattice, f, g, t, 1.0))


def test_time_zero_prefactor(lattice, fg):
    f, g = fg
    measures = [SiteMeasure.cosine(x, 0.3) for x in range(-3, 4)]
    expected = corollary_constant(lattice, 1.0, 0.5) * decay_sum(lattice, f, g, 1.0)
    assert np.isclose(anharmonic_bound(lattice, measures, f, g, 0.0, 1.0), expected)


def test_doubling_kappa(lattice, fg):
    f, g = fg
    t, mu, eps = 0.6, 1.0, 0.5
    weak = [SiteMeasure.cosine(1, 0.4)]
    strong = [SiteMeasure.cosine(1, 0.4, w=2.0)]
    ratio = anharmonic_bound(lattice, strong, f, g, t, mu, eps) / anharmonic_bound(lattice, weak, f, g, t, mu, eps)
    c = corollary_constant(lattice, mu, eps)
    expected = np.exp(c * kappa(weak) * convolution_constant_for(lattice) * t)
    assert np.isclose(ratio, expected)


def test_bounds_monotone_in_time(lattice, fg):
    f, g = fg
    measures = [SiteMeasure.cosine(0, 0.2 + 0.1j)]
    values = [anharmonic_bound(lattice, measures, f, g, t, 1.0) for t in np.linspace(0, 2, 6)]
    assert np.all(np.diff(values) > 0)
    assert anharmonic_bound(lattice, measures, f, g, -0.5, 1.0) == anharmonic_bound(lattice, measures, f, g, 0.5, 1.0)


def test_multisite_single_site_reduction(lattice, fg):
    f, g = fg
    t, mu, eps = 0.3, 1.0, 0.5
    measures = [SiteMeasure.cosine(x, 0.25) for x in (0, 1)]
    single = anharmonic_bound(lattice, measures, f, g, t, mu, eps)
    multi = multisite_bound(lattice, [m.lift() for m in measures], f, g, t, mu, eps)
    C_d = convolution_constant_for(lattice)
    c = corollary_constant(lattice, mu, eps)
    assert np.isclose(multi / single, np.exp(c * kappa(measures) * (C_d**2 - C_d) * t))


def pair(w):
    return MultiSiteMeasure(((0,), (1,)), (((0.3, 0.3j), w), ((-0.3, -0.3j), w)))


def test_multisite_monotone_and_rate_range(lattice, fg):
    f, g = fg
    weak = [multisite_log_bound(lattice, [pair(1.0)], f, g, t, 0.5) for t in (0.0, 1e-3, 0.5, 2.0)]
    strong = [multisite_log_bound(lattice, [pair(2.0)], f, g, t, 0.5) for t in (0.0, 1e-3, 0.5, 2.0)]
    assert np.all(np.isfinite(weak)) and np.all(np.diff(weak) > 0)
    assert weak[0] == strong[0]
    assert np.all(np.array(weak[1:]) < np.array(strong[1:]))
    assert multisite_bound(lattice, [pair(1.0)], f, g, 1e-3, 0.5) < multisite_bound(lattice, [pair(2.0)], f, g, 1e-3, 0.5)
    with pytest.raises(DomainError):
        multisite_bound(lattice, [pair(1.0)], f, g, 0.5, 1.0, mu1=0.8)


def test_infinite_volume_bound_matches_finite_evaluation():
    finite = HarmonicLattice(1, 1.0, 1.0, 64)
    infinite = HarmonicLattice(1, 1.0, 1.0)
    measures = [SiteMeasure.cosine(x, 0.2) for x in range(-2, 3)]
    points = {0: 1.0, 1: -0.5}, {4: 1.0j, 6: 0.25}
    for t in (0.0, 0.5, 1.0):
        a = anharmonic_bound(finite, measures, SiteFunction.from_dict(finite, points[0]),
                             SiteFunction.from_dict(finite, points[1]), t, 1.0, C_d=zd_convolution_constant(1))
        b = infinite_volume_bound(infinite, measures, SiteFunction.from_dict(infinite, points[0]),
                                  SiteFunction.from_dict(infinite, points[1]), t, 1.0)
        assert abs(a - b) <= 1e-9 * max(1.0, b)
    f0 = SiteFunction.from_dict(infinite, points[0])
    g0 = SiteFunction.from_dict(infinite, points[1])
    assert np.isclose(infinite_volume_bound(infinite, measures, f0, g0, 0.0, 1.0),
                      corollary_constant(infinite, 1.0, 0.5) * decay_sum(infinite, f0, g0, 1.0))


def test_infinite_volume_tail():
    lattice = HarmonicLattice(1, 1.0, 1.0)
    f = SiteFunction.delta(lattice, 0)
    measures = [SiteMeasure.cosine(x, 0.1) for x in range(-20, 21)]
    region = lambda r: [(x,) for x in range(-r, r + 1)]
    assert infinite_volume_tail(lattice, measures, f, 1.0, 1.0, region(5), region(5)) == 0.0
    near = infinite_volume_tail(lattice, measures, f, 1.0, 1.0, region(2), region(4))
    far = infinite_volume_tail(lattice, measures, f, 1.0, 1.0, region(6), region(8))
    assert 0.0 < far < near
    assert infinite_volume_tail(lattice, measures, f, 0.0, 1.0, region(2), region(4)) == 0.0
    assert infinite_volume_tail(lattice, measures, f, 2.0, 1.0, region(2), region(4)) > near


def test_measure_json_round_trip(tmp_path):
    measures = [SiteMeasure.cosine(2, 0.5 - 0.25j, w=0.75),
                MultiSiteMeasure(((0,), (1,)), (((0.3, 1j), 1.0), ((-0.3, -1j), 1.0)))]
    path = tmp_path / "measures.json"
    path.write_text(measures_to_json(measures))
    back = load_measures(path)
    assert back == measures


def test_measure_json_rejects_uneven():
    text = json.dumps([{"site": [0], "atoms": [{"re": 1.0, "im": 0.0, "w": 1.0}]}])
    with pytest.raises(DomainError):
        measures_from_json(text)


def test_log_bounds_survive_overflow(lattice, fg, caplog):
    f, g = fg
    t = 2.0
    log_value = multisite_log_bound(lattice, [pair(2.0)], f, g, t, 0.5)
    assert np.isfinite(log_value) and log_value > LOG_MAX
    with caplog.at_level("WARNING", logger="lrlab.anharmonic"):
        assert multisite_bound(lattice, [pair(2.0)], f, g, t, 0.5) == np.inf
    assert "beyond float range" in caplog.text
    measures = [SiteMeasure.cosine(0, 0.2)]
    assert np.isclose(np.exp(anharmonic_log_bound(lattice, measures, f, g, 0.7, 1.0)),
                      anharmonic_bound(lattice, measures, f, g, 0.7, 1.0))
