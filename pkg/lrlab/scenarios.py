"""
lrlab Scenarios
The nine verification scenarios behind `lrlab run`: defaults, semantic checks and runners.

Each runner takes the merged parameters, the seed, the tolerance table and a worker cap, and
returns a ScenarioResult. Rigorous inequalities decide "fail"; inconclusive fits, vacuous
certificates and trend observations only raise "warn".
"""

import json
import logging
from dataclasses import dataclass, field
from math import log
from pathlib import Path

import numpy as np
import pandas as pd

from lrlab import aklt, models
from lrlab.anharmonic import (
    LOG_MAX,
    MultiSiteMeasure,
    SiteMeasure,
    anharmonic_bound,
    convolution_constant_for,
    infinite_volume_bound,
    infinite_volume_tail,
    kappa,
    load_measures,
    multisite_log_bound,
)
from lrlab.clustering import FIT_FLOOR, fit_decay, harmonic_clustering, verify_clustering
from lrlab.config import DEFAULT_TOLERANCES
from lrlab.errors import ConfigError
from lrlab.gappedapprox import monotone_trend, pipeline_sweep
from lrlab.harmonic import (
    HarmonicLattice,
    SiteFunction,
    SymplecticPropagator,
    bogoliubov_residuals,
    corollary_bound,
    corollary_constant,
    kernel_decay_check,
    kernels_finite,
    kernels_infinite_grid,
    symplectic_oracle,
    verify_harmonic,
)
from lrlab.lattice import DecayFunction, SiteSet, convolution_constant_exact
from lrlab.lrbounds import series_coefficient, series_coefficient_bound, verify_lr
from lrlab.quantum import DENSE_CAP, LocalOperator, assemble
from lrlab.thermolimit import (
    NOISE_FLOOR,
    VolumeSequence,
    dyson_truncation,
    harmonic_volume_convergence,
    volume_convergence,
)

logger = logging.getLogger(__name__)

STATUSES = ("pass", "warn", "fail")
ORACLE_TOL = 1e-8
SYMPLECTIC_TOL = 1e-9
BOGOLIUBOV_TOL = 1e-10
KERNEL_AGREEMENT_TOL = 1e-6
SPECTRUM_TOL = 1e-12
ENTROPY_TOL = 1e-4
HARMONIC_LIMIT_TOL = 1e-6
REFERENCE_GAP = 0.4097
GAP_TOLERANCE = 0.1
SLOPE_TOLERANCE = 0.15
MAX_SPIN_HALF_SITES = int(round(log(DENSE_CAP, 2)))


@dataclass
class ScenarioResult:
    name: str
    status: str = "pass"
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def warn(self, message):
        logger.warning(f"{self.name}: {message}")
        self.warnings.append(message)
        if self.status == "pass":
            self.status = "warn"

    def fail(self, message):
        logger.error(f"{self.name}: {message}")
        self.warnings.append(message)
        self.status = "fail"

    def require(self, ok, message):
        if not ok:
            self.fail(message)
        return bool(ok)


@dataclass(frozen=True)
class Scenario:
    name: str
    theorem: str
    description: str
    defaults: dict
    runner: object = field(repr=False)
    validator: object = field(default=None, repr=False)

    def check(self, params):
        """Semantic checks on merged parameters; raises ConfigError"""
        if self.validator is not None:
            self.validator(params)

    def run(self, params, seed=0, tolerances=None, jobs=None):
        tolerances = {**DEFAULT_TOLERANCES, **(tolerances or {})}
        result = ScenarioResult(self.name)
        self.runner(result, params, seed, tolerances, jobs)
        result.summary.setdefault("theorem", self.theorem)
        return result


# Shared helpers

def _reject(name, message):
    raise ConfigError(f"[{name}] {message}")


def _time_grid(t_max, step=None, points=None):
    """Uniform grid on [0, t_max], rounded so repeated runs see identical floats"""
    if step is not None:
        n = int(round(t_max / step))
        return np.round(np.arange(n + 1) * step, 12)
    return np.round(np.linspace(0.0, t_max, points), 12)


def _check_times(name, params, *keys):
    for key in keys:
        if params[key] < 0:
            _reject(name, f"{key} must be nonnegative, got {params[key]}")


def _check_positive(name, params, *keys):
    for key in keys:
        value = params[key]
        values = value if isinstance(value, list) else [value]
        if not values or any(v <= 0 for v in values):
            _reject(name, f"{key} must be positive, got {value}")


def _check_chain(name, n, cap=MAX_SPIN_HALF_SITES):
    if n < 2:
        _reject(name, f"n_sites must be at least 2, got {n}")
    if n > cap:
        _reject(name, f"n_sites = {n} is above the dense cap of {cap} sites")


def _spin_chain(kind, S, J, h):
    """Interaction with any field folded into single-site terms"""
    if kind == "heisenberg":
        return models.heisenberg(S, J=J)
    if kind == "ising":
        return models.ising(S, J=J)
    phi, _ = models.tfim(S, J=J, h=h, field_in_interaction=True)
    return phi


def _random_qubit_observable(rng, site):
    M = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    M = M + M.conj().T
    return models.single_site(site, M / np.linalg.norm(M, 2))


# lr-spin

def _check_lr_spin(p):
    name = "lr-spin"
    _check_chain(name, p["n_sites"])
    if p["model"] not in ("heisenberg", "ising", "tfim"):
        _reject(name, f"model must be heisenberg, ising or tfim, got {p['model']!r}")
    for key in ("A_site", "B_site"):
        if not 0 <= p[key] < p["n_sites"]:
            _reject(name, f"{key} = {p[key]} is outside the chain")
    if p["A_site"] == p["B_site"]:
        _reject(name, "A_site and B_site must differ")
    _check_times(name, p, "t_max")
    _check_positive(name, p, "t_step", "mu")
    if p["oracle_sites"] and not 4 <= p["oracle_sites"] <= 8:
        _reject(name, f"oracle_sites must be 0 or in 4..8, got {p['oracle_sites']}")
    if p["random_pairs"] < 0:
        _reject(name, "random_pairs must be nonnegative")


def _run_lr_spin(result, p, seed, tol, jobs):
    S = SiteSet.path(p["n_sites"])
    phi = _spin_chain(p["model"], S, p["J"], p["h"])
    model = assemble(phi, [], S)
    F = DecayFunction.power(1)
    grid = _time_grid(p["t_max"], step=p["t_step"])
    A, B = models.sigma_z(p["A_site"]), models.sigma_z(p["B_site"])
    logger.info(f"lr-spin: {p['n_sites']}-site {p['model']} chain, {len(grid)} times")

    for form in ("series", "exponential"):
        report = verify_lr(model, phi, F, A, B, grid, form=form, mu=p["mu"], eps_num=tol["eps_num"], jobs=jobs)
        result.tables[f"sweep_{form}"] = report.to_frame()
        result.summary[form] = report.summary()
        result.require(report.passed, f"{form} bound violated by {report.summary()['max_violation']:.3g}")

    rng = np.random.default_rng(seed)
    frames = []
    for k in range(p["random_pairs"]):
        X = _random_qubit_observable(rng, p["A_site"])
        Y = _random_qubit_observable(rng, p["B_site"])
        report = verify_lr(model, phi, F, X, Y, grid, eps_num=tol["eps_num"], jobs=jobs)
        frames.append(report.to_frame().assign(pair_index=k))
        result.require(report.passed, f"series bound violated for random pair {k}")
    if frames:
        result.tables["random_pairs"] = pd.concat(frames, ignore_index=True)
        result.summary["random_pairs"] = p["random_pairs"]

    if p["oracle_sites"]:
        small = SiteSet.path(p["oracle_sites"])
        ising = models.ising(small)
        C = convolution_constant_exact(small, F)
        far = p["oracle_sites"] - 1
        rows = []
        for X, Y in (([(0,)], [(2,)]), ([(0,)], [(far,)]), ([(1,), (2,)], [(far,)])):
            for n in (1, 2, 3):
                a_n = series_coefficient(ising, X, Y, n)
                bound = series_coefficient_bound(ising, F, C, X, Y, n)
                rows.append({"X": str(X), "Y": str(Y), "n": n, "a_n": a_n, "bound": bound, "pass": a_n <= bound})
        table = pd.DataFrame(rows)
        result.tables["series_oracle"] = table
        result.summary["series_oracle_passed"] = bool(table["pass"].all())
        result.require(table["pass"].all(), "an enumerated series coefficient exceeds its bound")


# lr-harmonic

def _check_harmonic_lattice(name, p):
    if p["d"] < 1:
        _reject(name, f"d must be positive, got {p['d']}")
    _check_positive(name, p, "omega")
    if p["lam"] < 0:
        _reject(name, f"lam must be nonnegative, got {p['lam']}")


def _check_lr_harmonic(p):
    name = "lr-harmonic"
    _check_harmonic_lattice(name, p)
    _check_positive(name, p, "Ls", "mus", "separations", "t_points")
    _check_times(name, p, "t_max")
    for L in p["Ls"]:
        if (2 * L) ** p["d"] > 4096:
            _reject(name, f"L = {L} gives a volume above the phase-space oracle cap")
        if max(p["separations"]) > L:
            _reject(name, f"separation {max(p['separations'])} does not fit on the torus of half-width {L}")
    if p["infinite_radius"] > p["infinite_L"]:
        _reject(name, "infinite_radius must not exceed infinite_L")
    if any(t < 0 for t in p["infinite_times"]):
        _reject(name, "infinite_times must be nonnegative")


def _run_lr_harmonic(result, p, seed, tol, jobs):
    grid = _time_grid(p["t_max"], points=p["t_points"])
    oracle_rows, bound_frames, kernel_rows = [], [], []
    for L in p["Ls"]:
        lattice = HarmonicLattice(p["d"], p["omega"], p["lam"], L)
        origin = (0,) * lattice.d
        step = (1,) + (0,) * (lattice.d - 1)
        f = SiteFunction.from_dict(lattice, {origin: 1.0, step: 0.5j})
        g = SiteFunction.from_dict(lattice, {tuple(2 * c for c in step): 1.0, tuple(-c for c in step): -0.3})
        form = f.inner(g).imag
        for t in grid:
            propagator = SymplecticPropagator(lattice, t)
            Tf, Tg = propagator(f), propagator(g)
            oracle_rows.append({
                "L": L,
                "t": t,
                "oracle_difference": (Tf - symplectic_oracle(lattice, f, t)).norm2,
                "symplectic_residual": abs(Tf.inner(Tg).imag - form),
            })
        r1, r2 = bogoliubov_residuals(lattice)
        result.summary[f"bogoliubov_L{L}"] = {"unitarity": r1, "symmetry": r2}
        result.require(max(r1, r2) <= BOGOLIUBOV_TOL, f"Bogoliubov residual {max(r1, r2):.3g} at L={L}")

        for mu in p["mus"]:
            for s in p["separations"]:
                target = SiteFunction.delta(lattice, tuple(s * c for c in step))
                report = verify_harmonic(lattice, SiteFunction.delta(lattice, origin), target, grid, mu,
                                         eps_num=tol["eps_num"], jobs=jobs)
                bound_frames.append(report.to_frame().assign(L=L, mu=mu, separation=s))
                result.require(report.passed, f"harmonic bound violated at L={L}, mu={mu}, separation {s}")
            for t in grid:
                check = kernel_decay_check(lattice, t, mu)
                kernel_rows.append({"L": L, **check.summary()})
                result.require(check.passed, f"kernel envelope exceeded at L={L}, t={t}, mu={mu}")

    oracle = pd.DataFrame(oracle_rows)
    result.tables["oracle"] = oracle
    result.tables["bounds"] = pd.concat(bound_frames, ignore_index=True)
    kernels = pd.DataFrame(kernel_rows)
    kernels["worst_site"] = kernels["worst_site"].map(lambda x: ",".join(map(str, x)))
    result.tables["kernel_decay"] = kernels
    result.summary["max_oracle_difference"] = float(oracle["oracle_difference"].max())
    result.summary["max_symplectic_residual"] = float(oracle["symplectic_residual"].max())
    result.require(oracle["oracle_difference"].max() <= ORACLE_TOL, "T_t disagrees with the phase-space oracle")
    result.require(oracle["symplectic_residual"].max() <= SYMPLECTIC_TOL, "T_t does not preserve the symplectic form")

    if p["infinite_times"]:
        _infinite_kernels(result, p, jobs)


def _infinite_kernels(result, p, jobs):
    """Finite-torus kernels on a large volume against Brillouin-zone quadrature near the origin"""
    infinite = HarmonicLattice(p["d"], p["omega"], p["lam"])
    large = infinite.with_volume(p["infinite_L"])
    R = p["infinite_radius"]
    rows = []
    for t in p["infinite_times"]:
        quad = kernels_infinite_grid(infinite, t, radius=R, jobs=jobs)
        torus = kernels_finite(large, t)
        worst = 0.0
        for x in quad.sites():
            if sum(abs(c) for c in x) > R:
                continue
            i = tuple(c - o for c, o in zip(x, quad.origin))
            j = tuple(c - o for c, o in zip(x, torus.origin))
            for a, b in ((quad.h_minus1, torus.h_minus1), (quad.h_0, torus.h_0), (quad.h_plus1, torus.h_plus1)):
                worst = max(worst, abs(a[i] - b[j]))
        envelope = {mu: kernel_decay_check(infinite, t, mu, kernels=quad).passed for mu in p["mus"]}
        rows.append({"t": t, "max_difference": worst, "envelope_passed": all(envelope.values())})
        result.require(worst <= KERNEL_AGREEMENT_TOL, f"torus and quadrature kernels differ by {worst:.3g} at t={t}")
        result.require(all(envelope.values()), f"infinite-volume kernel envelope exceeded at t={t}")
    result.tables["infinite_kernels"] = pd.DataFrame(rows)


# anharmonic-bounds

def _check_anharmonic(p):
    name = "anharmonic-bounds"
    _check_harmonic_lattice(name, p)
    _check_positive(name, p, "L", "mu", "epsilon", "t_points", "separations")
    _check_times(name, p, "t_max")
    if p["weight"] < 0:
        _reject(name, "weight must be nonnegative")
    if not p["perturbed_sites"]:
        _reject(name, "perturbed_sites must not be empty")
    if not 0 <= p["tail_inner"] < p["tail_outer"]:
        _reject(name, "need 0 <= tail_inner < tail_outer")
    if p["measures_file"] and not Path(p["measures_file"]).exists():
        _reject(name, f"measures_file {p['measures_file']} not found")
    if max(p["separations"]) > p["L"]:
        _reject(name, "a separation does not fit on the torus")


def _site_tuple(x, d):
    return (int(x),) + (0,) * (d - 1)


def _run_anharmonic(result, p, seed, tol, jobs):
    lattice = HarmonicLattice(p["d"], p["omega"], p["lam"], p["L"])
    d = lattice.d
    z = complex(p["z_re"], p["z_im"])
    if p["measures_file"]:
        measures = load_measures(p["measures_file"])
    else:
        measures = [SiteMeasure.cosine(_site_tuple(x, d), z, p["weight"]) for x in p["perturbed_sites"]]
    singles = [m for m in measures if isinstance(m, SiteMeasure)]
    multi = [m for m in measures if isinstance(m, MultiSiteMeasure)]
    if p["pair_perturbation"] and len(p["perturbed_sites"]) >= 2:
        support = tuple(_site_tuple(x, d) for x in p["perturbed_sites"][:2])
        multi.append(MultiSiteMeasure(support, (((z, z), p["weight"]), ((-z, -z), p["weight"]))))

    mu, epsilon = p["mu"], p["epsilon"]
    C_d = convolution_constant_for(lattice)
    c = corollary_constant(lattice, mu, epsilon)
    k = kappa(singles)
    f = SiteFunction.delta(lattice, _site_tuple(0, d))
    rows = []
    for s in p["separations"]:
        g = SiteFunction.delta(lattice, _site_tuple(s, d))
        for t in _time_grid(p["t_max"], points=p["t_points"]):
            free = corollary_bound(lattice, f, g, t, mu, epsilon)
            perturbed = anharmonic_bound(lattice, singles, f, g, t, mu, epsilon, C_d)
            row = {
                "separation": s,
                "t": t,
                "harmonic": free,
                "anharmonic": perturbed,
                "ratio": perturbed / free if free > 0 else np.nan,
                "expected_ratio": float(np.exp(c * k * C_d * t)),
                "infinite_volume": infinite_volume_bound(lattice, singles, f, g, t, mu, epsilon),
            }
            if multi:
                log_multi = multisite_log_bound(lattice, multi, f, g, t, mu, epsilon, C_d=C_d)
                row["log_multisite"] = log_multi
                row["multisite"] = float(np.exp(log_multi)) if log_multi <= LOG_MAX else np.inf
            rows.append(row)
    table = pd.DataFrame(rows)
    result.tables["bounds"] = table
    ok = np.isclose(table["ratio"], table["expected_ratio"], rtol=1e-9) | table["ratio"].isna()
    result.require(ok.all(), "perturbed bound does not carry the exp(c kappa C_d t) growth factor")
    result.require((table["anharmonic"] >= table["harmonic"] - tol["eps_num"]).all(),
                   "perturbed bound falls below the harmonic one")
    if multi:
        growing = table.groupby("separation")["log_multisite"].apply(lambda s: bool(np.all(np.diff(s) >= 0)))
        result.require(growing.all(), "multi-site bound decreases in t")

    times = _time_grid(p["t_max"], points=p["t_points"])
    inner = [_site_tuple(x, d) for x in range(-p["tail_inner"], p["tail_inner"] + 1)]
    outer = [_site_tuple(x, d) for x in range(-p["tail_outer"], p["tail_outer"] + 1)]
    tails = [infinite_volume_tail(lattice, singles, f, t, mu, inner, outer, epsilon) for t in times]
    result.tables["volume_tail"] = pd.DataFrame({"t": times, "tail": tails})
    result.require(np.all(np.diff(tails) >= -tol["eps_num"]), "volume tail is not increasing in t")
    result.summary.update({"kappa": k, "C_d": C_d, "c": c, "n_measures": len(measures),
                           "multisite": bool(multi)})


# thermolimit and dyson

def _check_thermolimit(p):
    name = "thermolimit"
    if len(p["sizes"]) < 2:
        _reject(name, "sizes needs at least two volumes")
    if any(n % 2 == 0 or n < 1 for n in p["sizes"]) or sorted(p["sizes"]) != p["sizes"]:
        _reject(name, f"sizes must be increasing odd lengths, got {p['sizes']}")
    if max(p["sizes"]) > MAX_SPIN_HALF_SITES:
        _reject(name, f"volume {max(p['sizes'])} is above the dense cap of {MAX_SPIN_HALF_SITES} sites")
    _check_times(name, p, "t_max", "harmonic_t")
    _check_positive(name, p, "points", "harmonic_Ls")


def _run_thermolimit(result, p, seed, tol, jobs):
    J, h = p["J"], p["h"]

    def recipe(volume):
        return models.tfim(volume, J=J, h=h)

    seq = VolumeSequence.centered_chains(p["sizes"], recipe)
    table = volume_convergence(seq, models.sigma_z(0), p["t_max"], points=p["points"],
                               eps_num=tol["eps_num"], jobs=jobs)
    result.tables["volume_convergence"] = table
    result.require(table["pass"].all(), "a volume difference exceeds the tail bound")
    if not np.all(np.diff(table["delta"]) < 0):
        result.warn("volume differences are not strictly decreasing")
    result.summary["deltas"] = list(table["delta"])

    harmonic = harmonic_volume_convergence(1, p["omega"], p["lam"], {0: 1.0}, p["harmonic_t"],
                                           Ls=tuple(p["harmonic_Ls"]), jobs=jobs)
    result.tables["harmonic_volume_convergence"] = harmonic
    if harmonic["wraparound"].any():
        result.warn("some harmonic volumes are too small for the evolved support")
    differences = harmonic["difference"].to_numpy()
    if np.any(np.diff(differences) > NOISE_FLOOR):
        result.warn("harmonic volume differences grow with L beyond round-off")
    result.require(differences[-1] <= HARMONIC_LIMIT_TOL,
                   f"largest harmonic volume differs by {differences[-1]:.3g} from the infinite-volume dynamics")


def _check_dyson(p):
    name = "dyson"
    _check_chain(name, p["n_sites"])
    if not 0 <= p["v_site"] < p["n_sites"]:
        _reject(name, "v_site is outside the chain")
    if p["n_max"] < 0:
        _reject(name, "n_max must be nonnegative")
    _check_times(name, p, "t")


def _run_dyson(result, p, seed, tol, jobs):
    S = SiteSet.path(p["n_sites"])
    phi, field_terms = models.tfim(S, J=p["J"], h=p["h"])
    H0 = assemble(phi, field_terms, S)
    V = LocalOperator(((p["v_site"],),), 2, p["v_strength"] * models.SIGMA_X)
    report = dyson_truncation(H0, V, models.sigma_z(0), p["t"], p["n_max"], eps_num=tol["eps_num"])
    result.tables["dyson"] = report.to_frame()
    result.summary.update(report.summary())
    result.require(report.passed, "a Dyson remainder exceeds its factorial bound")


# clustering

def _check_clustering(p):
    name = "clustering"
    _check_chain(name, p["n_sites"])
    if p["max_translation"] < 1 or p["anchor_site"] + 1 + p["max_translation"] >= p["n_sites"]:
        _reject(name, "translations move the second observable off the chain")
    _check_positive(name, p, "a_grid")


def _clustering_status(result, report):
    if report.status == "fail":
        result.fail("correlations violate the certified clustering rate")
    elif report.status in ("inconclusive", "vacuous"):
        result.warn(f"clustering check is {report.status}")


def _run_clustering(result, p, seed, tol, jobs):
    S = SiteSet.path(p["n_sites"])
    phi, field_terms = models.tfim(S, J=p["J"], h=p["h"])
    model = assemble(phi, field_terms, S)
    anchor = p["anchor_site"]
    A = models.sigma_z(anchor)
    B = models.sigma_z(anchor + 1)
    report = verify_clustering(model, phi, A, B, range(p["max_translation"]), tuple(p["a_grid"]),
                               floor=tol["cluster_tol"], jobs=jobs)
    result.tables["correlations"] = report.to_frame()
    result.summary.update(report.summary())
    _clustering_status(result, report)


def _check_clustering_harmonic(p):
    name = "clustering-harmonic"
    _check_positive(name, p, "omegas", "L", "a", "separations")
    if max(p["separations"]) > p["L"]:
        _reject(name, "a separation does not fit on the torus")
    if p["lam"] < 0:
        _reject(name, "lam must be nonnegative")


def _run_clustering_harmonic(result, p, seed, tol, jobs):
    frames, rates = [], []
    for omega in p["omegas"]:
        lattice = HarmonicLattice(1, omega, p["lam"], p["L"])
        f = SiteFunction.delta(lattice, 0)
        report = harmonic_clustering(lattice, f, f, p["separations"], a=p["a"], floor=FIT_FLOOR)
        frames.append(report.to_frame().assign(omega=omega))
        result.summary[f"omega_{omega:g}"] = report.summary()
        _clustering_status(result, report)
        fit = report.series.fit
        rates.append(fit.rate if fit else np.nan)
        if fit is None or fit.rate <= 0:
            result.fail(f"no positive decay rate fitted at omega = {omega}")
    result.tables["correlations"] = pd.concat(frames, ignore_index=True)
    result.summary["fitted_rates"] = rates
    order = np.argsort(p["omegas"])
    result.require(np.all(np.diff(np.asarray(rates)[order]) > 0), "fitted rate does not grow with omega")


# aklt

def _check_aklt(p):
    name = "aklt"
    sizes = p["open_sizes"] + p["periodic_sizes"]
    if sizes and (min(sizes) < 3 or max(sizes) > aklt.MAX_CHAIN):
        _reject(name, f"chain lengths must lie in 3..{aklt.MAX_CHAIN}")
    if p["correlation_max"] < 2 or p["entropy_max"] < 1:
        _reject(name, "correlation_max must be at least 2 and entropy_max at least 1")
    L, a = p["factorization_L"], p["factorization_cut"]
    if L > aklt.MAX_CHAIN:
        _reject(name, f"factorization_L = {L} is above {aklt.MAX_CHAIN}")
    for ell in p["factorization_ells"]:
        if ell < 1 or a - ell < 1 or a + ell + 1 > L:
            _reject(name, f"margin {ell} around cut {a} does not fit in 1..{L}")


def _run_aklt(result, p, seed, tol, jobs):
    E = aklt.transfer_map()
    spectrum = E.spectrum()
    reference = np.array([1.0, -1 / 3, -1 / 3, -1 / 3])
    result.tables["transfer_spectrum"] = pd.DataFrame({"eigenvalue": spectrum})
    result.require(np.max(np.abs(spectrum - reference)) <= SPECTRUM_TOL, "transfer spectrum is not {1, -1/3 x3}")

    distances = np.arange(1, p["correlation_max"] + 1)
    zz = np.array([aklt.correlation(3, 3, r) for r in distances])
    ratios = zz[1:] / zz[:-1]
    result.tables["correlations"] = pd.DataFrame({"r": distances, "zz": zz,
                                                  "ratio": np.concatenate([[np.nan], ratios])})
    result.require(np.max(np.abs(ratios + 1 / 3)) <= SPECTRUM_TOL, "correlation ratio is not -1/3")

    rows = []
    for n in p["open_sizes"]:
        E0, gap, degeneracy = aklt.aklt_gap(n)
        rows.append({"n": n, "boundary": "open", "E0": E0, "gap": gap, "degeneracy": degeneracy})
        result.require(degeneracy == 4, f"open chain n={n} has ground degeneracy {degeneracy}, expected 4")
    for n in p["periodic_sizes"]:
        E0, gap, degeneracy = aklt.aklt_gap(n, periodic=True)
        rows.append({"n": n, "boundary": "periodic", "E0": E0, "gap": gap, "degeneracy": degeneracy})
        result.require(degeneracy == 1, f"periodic chain n={n} has ground degeneracy {degeneracy}")
        if n == 10:
            result.require(abs(gap - REFERENCE_GAP) <= GAP_TOLERANCE,
                           f"periodic n=10 gap {gap:.4f} is farther than {GAP_TOLERANCE} from {REFERENCE_GAP}")
    result.tables["gaps"] = pd.DataFrame(rows)

    entropy = aklt.entropy_table(range(1, p["entropy_max"] + 1))
    result.tables["entropy"] = entropy
    result.require(np.all(np.diff(entropy["entropy"]) > 0), "interval entropy is not increasing")
    if p["entropy_max"] >= 12:
        deviation = float(entropy["gap_to_log4"].iloc[11])
        result.require(abs(deviation) <= ENTROPY_TOL, f"|S(12) - log 4| = {deviation:.3g}")
    psi = aklt.vbs_vectors(8).reshape(9, 81, 9, 4)
    rho = 0.5 * np.einsum("lmrk,lnrk->mn", psi, psi.conj())
    ed = np.sort(np.linalg.eigvalsh(rho))[-4:]
    engine = np.sort(np.linalg.eigvalsh(aklt.reduced_density(4)))
    result.summary["entropy_cross_check"] = float(np.max(np.abs(ed - engine)))
    result.require(np.allclose(ed, engine, atol=1e-10), "four-site density disagrees with the valence-bond state")

    L, a, ells = p["factorization_L"], p["factorization_cut"], tuple(p["factorization_ells"])
    table = aklt.factorization_table(L, a, ells)
    control = aklt.factorization_table(L, a, ells, bond="heisenberg")
    table["heisenberg_residual"] = control["residual"]
    result.tables["factorization"] = table
    fit = fit_decay(table["ell"], table["residual"])
    if fit is None:
        result.fail("factorization residuals are all below the fit floor")
    else:
        result.summary["factorization_rate"] = fit.rate
        result.require(abs(fit.rate - log(3.0)) <= SLOPE_TOLERANCE * log(3.0),
                       f"factorization decay rate {fit.rate:.4f} is not within 15% of ln 3")
    if p["lower_bound"]:
        result.tables["gap_lower_bound"] = aklt.gap_lower_bound_report(L, a, ells)
    result.summary.update({"transfer_spectrum": spectrum.real, "correlation_length": aklt.CORRELATION_LENGTH})


# gapped-approx

def _check_gapped(p):
    name = "gapped-approx"
    n, size = p["n_sites"], p["A_size"]
    _check_chain(name, n)
    if not 1 <= size < n:
        _reject(name, f"A_size must lie in 1..{n - 1}, got {size}")
    if not p["ells"] or min(p["ells"]) < 1:
        _reject(name, "ells must be positive")
    cover = max(size, n - size + 1)
    if max(p["ells"]) >= cover:
        _reject(name, f"band width {max(p['ells'])} is larger than the chain allows: B(ell) covers all "
                      f"{n} sites once ell >= {cover}")
    if p["method"] not in ("closed", "quadrature"):
        _reject(name, f"method must be closed or quadrature, got {p['method']!r}")
    _check_positive(name, p, "a", "v")


def _run_gapped(result, p, seed, tol, jobs):
    S = SiteSet.path(p["n_sites"])
    phi, field_terms = models.tfim(S, J=p["J"], h=p["h"])
    model = assemble(phi, field_terms, S)
    A = [(x,) for x in range(p["A_size"])]
    reports, table = pipeline_sweep(model, phi, field_terms, A, p["ells"], p["a"], p["v"], p["J"],
                                    p["method"], jobs=jobs)
    for name in ("A", "B", "rest"):
        table[f"residual_gs_{name}"] = [r.residual_gs[name] for r in reports]
    result.tables["pipeline"] = table
    result.summary["reports"] = [r.summary() for r in reports]
    for r in reports:
        result.require(r.passed, f"a rigorous pipeline inequality fails at ell={r.ell}")
        for message in r.warnings:
            result.warn(message)
    if not monotone_trend(table["final_residual"], allowed=0):
        result.warn("final residual is not decreasing in ell")
    for name in ("A", "rest"):
        if not monotone_trend(table[f"residual_gs_{name}"], allowed=0):
            result.warn(f"ground-state residual of K_{name} is not decreasing in ell")


SCENARIOS = {s.name: s for s in (
    Scenario(
        "lr-spin",
        "Lieb-Robinson commutator bound for quantum spin interactions (series and exponential forms)",
        "8-site spin-1/2 chain: ||[tau_t(A), B]|| against the bounds, plus the enumerated series coefficients",
        {"n_sites": 8, "model": "heisenberg", "J": 1.0, "h": 0.0, "A_site": 0, "B_site": 7,
         "t_max": 2.0, "t_step": 0.05, "mu": 1.0, "random_pairs": 1, "oracle_sites": 5},
        _run_lr_spin, _check_lr_spin),
    Scenario(
        "lr-harmonic",
        "Locality bound for the harmonic lattice and its pointwise kernel estimates",
        "Weyl commutators on the torus, phase-space oracle, Bogoliubov identities, infinite-volume kernels",
        {"d": 1, "omega": 1.0, "lam": 1.0, "Ls": [16, 32], "t_max": 3.0, "t_points": 31,
         "separations": [1, 2, 4, 8], "mus": [0.5, 1.0], "infinite_L": 64, "infinite_radius": 8,
         "infinite_times": [0.5, 1.0]},
        _run_lr_harmonic, _check_lr_harmonic),
    Scenario(
        "anharmonic-bounds",
        "Locality bound for bounded anharmonic perturbations of the harmonic lattice",
        "Single-site and pair Weyl perturbations: growth factor, infinite-volume form and convergence tail",
        {"d": 1, "omega": 1.0, "lam": 1.0, "L": 16, "mu": 1.0, "epsilon": 0.5, "z_re": 0.5, "z_im": 0.0,
         "weight": 0.1, "perturbed_sites": [0, 1], "pair_perturbation": True, "separations": [2, 4, 8],
         "t_max": 2.0, "t_points": 21, "tail_inner": 0, "tail_outer": 8, "measures_file": ""},
        _run_anharmonic, _check_anharmonic),
    Scenario(
        "thermolimit",
        "Existence of the infinite-volume dynamics as a limit over nested volumes",
        "Centred transverse-field Ising chains: sup_t ||tau^m_t(A) - tau^n_t(A)|| against the tail bound",
        {"sizes": [5, 7, 9, 11], "J": 1.0, "h": 0.8, "t_max": 1.0, "points": 64,
         "omega": 1.0, "lam": 1.0, "harmonic_t": 1.0, "harmonic_Ls": [8, 16, 32, 64]},
        _run_thermolimit, _check_thermolimit),
    Scenario(
        "dyson",
        "Dyson expansion of the perturbed dynamics with its factorial remainder bound",
        "4-site chain, single-site perturbation, partial sums up to order 5",
        {"n_sites": 4, "J": 1.0, "h": 0.6, "v_site": 1, "v_strength": 0.3, "t": 0.5, "n_max": 5},
        _run_dyson, _check_dyson),
    Scenario(
        "clustering",
        "Exponential clustering of gapped ground states",
        "12-site transverse-field Ising ground state: truncated correlations against mu = a gamma / (gamma + 4 ||Phi||_a)",
        {"n_sites": 12, "J": 1.0, "h": 2.0, "anchor_site": 1, "max_translation": 9,
         "a_grid": [0.25, 0.5, 1.0, 2.0]},
        _run_clustering, _check_clustering),
    Scenario(
        "clustering-harmonic",
        "Exponential clustering in the harmonic lattice vacuum",
        "Vacuum Weyl correlations for omega = 2 and 8; the heavier lattice decays faster",
        {"omegas": [2.0, 8.0], "lam": 1.0, "L": 16, "a": 1.0, "separations": list(range(1, 13))},
        _run_clustering_harmonic, _check_clustering_harmonic),
    Scenario(
        "aklt",
        "AKLT chain: finitely correlated ground state, spectral gap and projector factorization",
        "Transfer spectrum, correlations, kernel dimension, gaps, interval entropy, factorization residuals",
        {"open_sizes": [3, 4, 5, 6, 7, 8], "periodic_sizes": [6, 8, 10], "correlation_max": 10,
         "entropy_max": 12, "factorization_L": 10, "factorization_cut": 5, "factorization_ells": [1, 2, 3],
         "lower_bound": True},
        _run_aklt, _check_aklt),
    Scenario(
        "gapped-approx",
        "Approximation of a gapped ground-state projector by local projections",
        "10-site transverse-field Ising chain cut in half: smoothing, low-energy projectors, boundary operator",
        {"n_sites": 10, "J": 1.0, "h": 2.0, "A_size": 5, "ells": [1, 2, 3], "a": 1.0, "v": 2.0,
         "method": "closed"},
        _run_gapped, _check_gapped),
)}


def scenario_table():
    """One row per scenario in registry order: name, theorem, description, defaults as JSON"""
    return pd.DataFrame([{
        "name": s.name,
        "theorem": s.theorem,
        "description": s.description,
        "defaults": json.dumps(s.defaults, sort_keys=True),
    } for s in SCENARIOS.values()])
