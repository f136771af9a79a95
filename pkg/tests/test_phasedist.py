import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import ks_distance
from phasecov.phasedist import (
    IDEAL,
    MeasurementModel,
    SeriesControl,
    circular_variance,
    dh_density,
    dh_density_marginal,
    dh_sample_direct,
    phase_cdf,
    phase_coefficients,
    sample_phase,
    sg_density,
)

PHI = np.linspace(0.0, 2 * math.pi, 4096, endpoint=False)


def dh_pre_series(phi, gamma, eta, nodes=60):
    """Phase marginal of the Gaussian-smeared Q function by nested quadrature.

    Inner: Gauss-Hermite over the smearing variable beta = gamma + Delta (u + iv).
    Outer: adaptive quadrature over the outcome modulus r.
    """
    delta = math.sqrt((1 - eta) / eta)
    u, w = np.polynomial.hermite.hermgauss(nodes)
    uu, vv = np.meshgrid(u, u)
    ww = np.outer(w, w) / math.pi
    beta = gamma + delta * (uu + 1j * vv)

    def radial(r):
        alpha = r * complex(math.cos(phi), math.sin(phi))
        return r * np.sum(ww * np.exp(-np.abs(beta - alpha) ** 2))

    return quad(radial, 0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)[0] / math.pi


def test_model_validation():
    assert IDEAL.excess_noise == 0.0
    assert MeasurementModel.double_homodyne(1.0).excess_noise == 0.0
    assert MeasurementModel.double_homodyne(0.8).excess_noise == pytest.approx(0.25)
    assert MeasurementModel.double_homodyne(0.8, "squared").excess_noise == pytest.approx(0.0625)
    for bad in (0.0, -0.2, 1.2):
        with pytest.raises(ValueError):
            MeasurementModel.double_homodyne(bad)
    with pytest.raises(ValueError):
        MeasurementModel("homodyne")
    with pytest.raises(ValueError):
        SeriesControl(n_max=0)
    with pytest.raises(ValueError):
        SeriesControl(tail_tol=0.0)


def test_auto_cutoff():
    ctrl = SeriesControl()
    assert ctrl.initial_cutoff(0.0) == 50
    for x in (3.0, 7.5, 12.0):
        assert ctrl.initial_cutoff(x) >= x * x + 10 * x + 20


def test_vacuum_is_uniform():
    np.testing.assert_allclose(sg_density(PHI[::97], 0.0), 1 / (2 * math.pi), rtol=1e-15)
    for eta in (0.3, 0.8, 1.0):
        np.testing.assert_allclose(dh_density(PHI[::97], 0.0, eta), 1 / (2 * math.pi), rtol=1e-15)


def test_sg_peak_against_oversummed_series():
    # 50-digit sum of the amplitude series with n_max = 400
    assert sg_density(0.0, 3.0) == pytest.approx(2.3542838246312616276, rel=1e-12)
    assert np.argmax(sg_density(PHI, 3.0)) == 0


@pytest.mark.parametrize("gamma", [0.0, 0.5, 2.0, 5.0, 10.0])
def test_normalization(gamma):
    h = 2 * math.pi / len(PHI)
    assert abs(sg_density(PHI, gamma).sum() * h - 1) < 1e-9
    for eta in (0.5, 0.8, 1.0):
        assert abs(dh_density(PHI, gamma, eta).sum() * h - 1) < 1e-9


@pytest.mark.parametrize("gamma", [0.5, 2.0, 5.0, 10.0])
def test_symmetry_and_positivity(gamma):
    for p in (sg_density(PHI, gamma), dh_density(PHI, gamma, 0.8)):
        assert np.all(p >= -1e-13 * p.max())  # cosine series floor is roundoff
        np.testing.assert_allclose(p[1:], p[1:][::-1], rtol=0, atol=1e-12 * p.max())


def test_dh_series_matches_nested_quadrature():
    ref = dh_pre_series(0.3, 2.0, 0.8)
    assert dh_density(0.3, 2.0, 0.8) == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("gamma,eta", [(0.7, 0.5), (2.0, 1.0), (5.0, 0.8), (9.0, 0.95)])
def test_dh_series_matches_radial_marginal(gamma, eta):
    np.testing.assert_allclose(dh_density(PHI, gamma, eta), dh_density_marginal(PHI, gamma, eta),
                               rtol=0, atol=1e-12)


def _circular_variance_quad(density):
    c = quad(lambda p: density(p) * math.cos(p), -math.pi, math.pi, points=[0.0])[0]
    return 1 - c


def test_efficiency_sharpens_distribution():
    v1 = _circular_variance_quad(lambda p: float(dh_density(p, 4.0, 1.0)))
    v05 = _circular_variance_quad(lambda p: float(dh_density(p, 4.0, 0.5)))
    assert v1 < v05


@pytest.mark.parametrize("gamma", [1.0, 2.0, 5.0])
def test_heterodyne_is_noisier_than_ideal(gamma):
    assert dh_density(0.0, gamma, 1.0) < sg_density(0.0, gamma)


def test_fixed_cutoff_reports_tail():
    coef = phase_coefficients(IDEAL, 5.0, SeriesControl(n_max=10))
    assert coef.n_max == 10
    assert coef.tail_bound > 1e-3
    assert phase_coefficients(IDEAL, 5.0).tail_bound < 1e-10


def test_cdf_endpoints():
    for model in (IDEAL, MeasurementModel.double_homodyne(0.8)):
        F = phase_cdf(model, np.array([-math.pi, 0.0, math.pi]), 3.0)
        np.testing.assert_allclose(F, [0.0, 0.5, 1.0], atol=1e-12)


def test_domain_errors():
    with pytest.raises(ValueError):
        sg_density(0.0, -1.0)
    with pytest.raises(ValueError):
        dh_density(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        dh_density(0.0, -1.0, 0.5)
    with pytest.raises(ValueError):
        sample_phase(IDEAL, 1.0, 1, 0)
    with pytest.raises(ValueError):
        dh_sample_direct(-1.0, 0.9, 1, 10)


def test_uniform_sampling():
    for model in (IDEAL, MeasurementModel.double_homodyne(0.7)):
        s = sample_phase(model, 0.0, 11, 10**5)
        assert np.all((s >= 0) & (s < 2 * math.pi))
        assert ks_distance(s, lambda x: (x + math.pi) / (2 * math.pi)) < 0.007
    s = dh_sample_direct(0.0, 1.0, 5, 10**5)
    assert ks_distance(s, lambda x: (x + math.pi) / (2 * math.pi)) < 0.007


def test_sampling_is_deterministic():
    a = sample_phase(IDEAL, 2.0, 42, 1000)
    b = sample_phase(IDEAL, 2.0, 42, 1000)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample_phase(IDEAL, 2.0, 43, 1000))


def test_sg_samples_centered():
    s = sample_phase(IDEAL, 5.0, 3, 10**6)
    sin = np.sin(s)
    assert abs(sin.mean()) < 3 * sin.std() / math.sqrt(len(s))


@pytest.mark.parametrize("model", [IDEAL, MeasurementModel.double_homodyne(0.8)])
def test_tabulated_sampler_matches_cdf(model):
    n = 10**6
    s = sample_phase(model, 5.0, 17, n)
    assert ks_distance(s, lambda x: phase_cdf(model, x, 5.0)) < 2 / math.sqrt(n)


def test_dh_samples_wider_than_ideal():
    ideal = sample_phase(IDEAL, 5.0, 1, 10**6)
    dh = sample_phase(MeasurementModel.double_homodyne(1.0), 5.0, 1, 10**6)
    assert circular_variance(dh) > circular_variance(ideal)


@pytest.mark.parametrize("gamma,eta", [(5.0, 0.8), (5.0, 1.0), (2.0, 1.0)])
def test_direct_dh_sampling_matches_series(gamma, eta):
    n = 10**6
    s = dh_sample_direct(gamma, eta, 2024, n)
    model = MeasurementModel.double_homodyne(eta)
    assert ks_distance(s, lambda x: phase_cdf(model, x, gamma)) < 0.002


def test_direct_and_tabulated_agree():
    from scipy.stats import ks_2samp
    model = MeasurementModel.double_homodyne(0.8)
    a = dh_sample_direct(3.0, 0.8, 8, 200_000)
    b = sample_phase(model, 3.0, 9, 200_000)
    wrap = lambda s: np.mod(s + math.pi, 2 * math.pi) - math.pi
    assert ks_2samp(wrap(a), wrap(b)).pvalue > 0.01
