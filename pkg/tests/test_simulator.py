import math

import numpy as np
import pytest

from phasecov.fidelity import FeedforwardParams, SchemeConfig, series_fidelity
from phasecov.phasedist import IDEAL, MeasurementModel
from phasecov.simulator import (
    BATCH_SIZE,
    covariance_check,
    simulate,
    simulate_feedforward,
    simulate_semiclassical,
    trajectories,
)

DH1 = MeasurementModel.double_homodyne(1.0)
DH08 = MeasurementModel.double_homodyne(0.8)


def cfg(alpha, model=IDEAL, n=1, m=2):
    return SchemeConfig(n, m, alpha, model)


@pytest.mark.parametrize("alpha", [0.5, 3.0])
@pytest.mark.parametrize("model", [IDEAL, DH08])
def test_identity_map_is_exact(alpha, model):
    res = simulate_feedforward(cfg(alpha, model, n=2, m=2), FeedforwardParams(0.0, 0.0), 10**4, 1)
    assert res.mean == 1.0
    assert res.std_error == 0.0


@pytest.mark.parametrize("model", [IDEAL, DH1])
def test_vacuum_semiclassical(model):
    res = simulate_semiclassical(cfg(0.0, model), 10**4, 2)
    assert res.mean == pytest.approx(1.0, abs=1e-15)


def test_minimum_samples():
    with pytest.raises(ValueError):
        simulate_feedforward(cfg(1.0), FeedforwardParams(0.5, 0.5), 999, 1)
    with pytest.raises(ValueError):
        simulate_semiclassical(cfg(1.0), 10, 1)
    with pytest.raises(ValueError):
        simulate(cfg(1.0), None, 0, 1)


def test_deterministic_per_seed():
    par = FeedforwardParams(0.8, 0.7)
    a = simulate(cfg(3.0, DH08), par, 150_000, 99)
    b = simulate(cfg(3.0, DH08), par, 150_000, 99)
    assert a == b
    assert a.as_dict()["generator"] == "PCG64"
    assert simulate(cfg(3.0, DH08), par, 150_000, 100).mean != a.mean


def test_batches_are_prefix_stable():
    # the first batch of a long run equals a run of exactly one batch
    par = FeedforwardParams(0.8, 0.7)
    one = trajectories(cfg(3.0), par, BATCH_SIZE, 5)["fidelity_sample"]
    assert simulate(cfg(3.0), par, BATCH_SIZE, 5).mean == pytest.approx(math.fsum(one) / BATCH_SIZE, rel=1e-15)


@pytest.mark.parametrize("model", [IDEAL, DH08])
@pytest.mark.parametrize("par", [None, FeedforwardParams(0.86, 0.75)])
def test_trajectory_records(model, par):
    rec = trajectories(cfg(3.0, model), par, 2000, 3, input_phase=1.1)
    alpha = 3.0 * np.exp(1.1j)
    np.testing.assert_allclose(rec["fidelity_sample"], np.exp(-np.abs(alpha - rec["clone_amplitude"]) ** 2))
    assert np.all(rec["input_phase"] == 1.1)
    phi = rec["measured_phase"]
    assert np.all((phi >= 0) & (phi < 2 * math.pi))
    # measured phases cluster around the input phase
    assert abs(np.angle(np.mean(np.exp(1j * (phi - 1.1))))) < 0.05


@pytest.mark.parametrize("model,par", [
    (IDEAL, None), (DH08, None),
    (IDEAL, FeedforwardParams(0.86, 0.75)), (DH08, FeedforwardParams(0.81, 0.70))])
def test_agreement_over_many_seeds(model, par):
    c = cfg(2.0, model)
    target = series_fidelity(c, par).value
    hits = 0
    for seed in range(100):
        res = simulate(c, par, 10**5, seed)
        hits += abs(res.mean - target) < 3 * res.std_error
    assert hits >= 99


def test_standard_error_scaling():
    par = FeedforwardParams(0.86, 0.75)
    small = simulate(cfg(3.0), par, 10**4, 4).std_error
    large = simulate(cfg(3.0), par, 10**6, 4).std_error
    assert small / large == pytest.approx(10.0, rel=0.1)


def test_batch_substreams_are_independent():
    par = FeedforwardParams(0.86, 0.75)
    a = trajectories(cfg(3.0), par, BATCH_SIZE, 11)["measured_phase"]
    b = trajectories(cfg(3.0), par, BATCH_SIZE, 12)["measured_phase"]
    r = np.corrcoef(np.sin(a), np.sin(b))[0, 1]
    assert abs(r) < 4 / math.sqrt(BATCH_SIZE)


@pytest.mark.parametrize("model,par", [(IDEAL, FeedforwardParams(0.861, 0.746)), (DH08, None)])
def test_covariance(model, par):
    c = cfg(3.0, model)
    a = covariance_check(c, par, 0.0, 10**6, 21)
    b = covariance_check(c, par, math.pi, 10**6, 22)
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.std_error, b.std_error)


def test_table_anchor_ideal():
    res = simulate_feedforward(cfg(3.0), FeedforwardParams(0.861, 0.746), 10**6, 31)
    assert abs(res.mean - series_fidelity(cfg(3.0), FeedforwardParams(0.861, 0.746)).value) < 3 * res.std_error
    res = simulate_semiclassical(cfg(3.0), 10**6, 32)
    assert abs(res.mean - 0.810) < 3 * res.std_error
