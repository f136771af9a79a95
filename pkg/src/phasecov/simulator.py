"""Monte Carlo run of the cloning pipelines.

All states stay coherent, so a run is amplitude bookkeeping plus one random
phase outcome per trial:

1. concentrate ``N`` copies of ``|alpha>`` into ``|sqrt(N) alpha>``;
2. (feedforward) split into ``sqrt(N) alpha cos(theta)`` and
   ``sqrt(N) alpha sin(theta)``;
3. measure the phase of the probe amplitude;
4. build the clone amplitude and score it with ``exp(-|alpha - beta|^2)``.

Ideal phase outcomes come from the tabulated inverse-CDF sampler; double-homodyne
outcomes are drawn operationally as the argument of a Gaussian complex outcome.
Samples are processed in fixed-size batches, each with its own substream
derived from ``(seed, batch index)``, so results do not depend on how batches
are scheduled.
"""

import math
from dataclasses import dataclass

import numpy as np

from .phasedist import PhaseSampler, draw_dh_phases

__all__ = [
    "GENERATOR",
    "BATCH_SIZE",
    "EstimateResult",
    "trajectories",
    "simulate",
    "simulate_feedforward",
    "simulate_semiclassical",
    "covariance_check",
]

GENERATOR = "PCG64"
BATCH_SIZE = 1 << 16


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    std_error: float
    samples: int
    seed: int
    generator: str = GENERATOR

    def as_dict(self):
        return {"mean": self.mean, "std_error": self.std_error,
                "samples": self.samples, "seed": self.seed,
                "generator": self.generator}


def _batch_rng(seed, index):
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=(index,))))


class _Pipeline:
    def __init__(self, cfg, par, input_phase):
        self.cfg = cfg
        self.par = par
        a = cfg.alpha_mod
        self.alpha = a * complex(math.cos(input_phase), math.sin(input_phase))
        concentrated = math.sqrt(cfg.n_in) * self.alpha
        if par is None:
            self.kept = 0.0
            probe = concentrated
        else:
            self.kept = concentrated * math.cos(par.theta)
            probe = concentrated * math.sin(par.theta)
        self.probe = probe
        self.probe_phase = math.atan2(probe.imag, probe.real)
        self.sampler = None
        if cfg.model.kind == "sg":
            self.sampler = PhaseSampler(cfg.model, abs(probe))

    def measure(self, rng, count):
        if self.sampler is not None:
            return np.mod(self.sampler.sample(rng, count) + self.probe_phase, 2 * math.pi)
        return draw_dh_phases(rng, self.probe, self.cfg.model, count)

    def clones(self, phi):
        a = self.cfg.alpha_mod
        if self.par is None:
            return a * np.exp(1j * phi)
        return (self.kept + self.par.k * a * np.exp(1j * phi)) / math.sqrt(self.cfg.m_out)

    def run(self, rng, count):
        phi = self.measure(rng, count)
        beta = self.clones(phi)
        return phi, beta, np.exp(-np.abs(self.alpha - beta) ** 2)


def trajectories(cfg, par, count, seed, input_phase=0.0):
    """Per-trial records: input phase, measured phase, clone amplitude, fidelity.

    Returns a dict of arrays keyed ``input_phase``, ``measured_phase``,
    ``clone_amplitude`` and ``fidelity_sample``. ``par=None`` runs the
    measure-and-prepare scheme.
    """
    pipe = _Pipeline(cfg, par, input_phase)
    phi, beta, fid = pipe.run(_batch_rng(seed, 0), count)
    return {
        "input_phase": np.full(count, input_phase),
        "measured_phase": phi,
        "clone_amplitude": beta,
        "fidelity_sample": fid,
    }


def simulate(cfg, par, samples, seed, input_phase=0.0):
    """Estimate the single-clone fidelity; ``par=None`` selects measure-and-prepare."""
    if samples < 1:
        raise ValueError("samples must be positive")
    pipe = _Pipeline(cfg, par, input_phase)
    total = 0.0
    total_sq = 0.0
    done = 0
    index = 0
    while done < samples:
        count = min(BATCH_SIZE, samples - done)
        _, _, fid = pipe.run(_batch_rng(seed, index), count)
        total += math.fsum(fid)
        total_sq += math.fsum(fid * fid)
        done += count
        index += 1
    mean = total / samples
    if samples > 1:
        var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    else:
        var = 0.0
    return EstimateResult(mean, math.sqrt(var / samples), samples, seed)


def simulate_feedforward(cfg, par, samples, seed):
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    return simulate(cfg, par, samples, seed)


def simulate_semiclassical(cfg, samples, seed):
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    return simulate(cfg, None, samples, seed)


def covariance_check(cfg, par, input_phase, samples, seed):
    """Run the pipeline for ``alpha = |alpha| exp(i input_phase)``."""
    return simulate(cfg, par, samples, seed, input_phase)
