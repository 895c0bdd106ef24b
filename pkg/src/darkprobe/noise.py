"""Ornstein-Uhlenbeck dephasing of the probe during the pulsed measurement.

The probe picks up H_noise = (b(t)/2) sigma_z^p with b a stationary Gaussian
process of variance b0^2 and correlation time tb.  b is held constant on a
grid of step dt and advanced with the exact one-step OU update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from . import core
from .core import PulseSequence
from .spin import SpinFields

DEFAULT_STEPS_PER_TAU = 50


@dataclass(frozen=True)
class NoiseModel:
    b0: float  # standard deviation, rad/s
    tb: float  # correlation time, s (may be inf for frozen noise)
    dt: float | None = None  # None -> tau / 50
    seed: int = 0
    realizations: int = 1000

    def __post_init__(self):
        if self.b0 < 0:
            raise ValueError("b0 must be non-negative")
        if not self.tb > 0:
            raise ValueError("tb must be positive")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        if self.dt is not None:
            if not self.dt > 0:
                raise ValueError("dt must be positive")
            if self.dt > self.tb / 20:
                raise ValueError(f"dt = {self.dt:.3g} must not exceed tb/20 = {self.tb / 20:.3g}")

    @property
    def t2_star(self) -> float:
        """Free-induction decay time sqrt(2)/b0 of the bare probe."""
        return math.inf if self.b0 == 0 else math.sqrt(2) / self.b0


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one realization, independent of execution order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def ou_path(b0: float, tb: float, dt: float, n_steps: int, rng: np.random.Generator) -> np.ndarray:
    """n_steps + 1 samples b(0), b(dt), ... starting from the stationary law."""
    decay = math.exp(-dt / tb)
    kick = b0 * math.sqrt(-math.expm1(-2 * dt / tb))
    normals = rng.standard_normal(n_steps + 1)
    start = b0 * normals[0]
    if n_steps == 0:
        return np.array([start])
    drive = kick * normals[1:]
    rest, _ = lfilter([1.0], [1.0, -decay], drive, zi=[decay * start])
    return np.concatenate([[start], rest])


def ou_trajectory(m: NoiseModel, duration: float, realization: int = 0) -> np.ndarray:
    """Sampled path over ``duration`` for one realization of ``m``."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    if m.dt is None:
        raise ValueError("a trajectory needs an explicit dt")
    n_steps = max(1, round(duration / m.dt))
    return ou_path(m.b0, m.tb, m.dt, n_steps, realization_rng(m.seed, realization))


class NoisyMeasurement(NamedTuple):
    sx_mean: float
    sy_mean: float
    sx_stderr: float
    sy_stderr: float
    tau_used: float
    dt_used: float


def _snap(seq: PulseSequence, m: NoiseModel) -> tuple[int, float]:
    """Steps per tau and the step actually used; tau is snapped to the dt grid."""
    if m.dt is None:
        steps, dt = DEFAULT_STEPS_PER_TAU, seq.tau / DEFAULT_STEPS_PER_TAU
        if dt > m.tb / 20:
            raise ValueError(f"default dt = tau/{steps} = {dt:.3g} exceeds tb/20; pass a smaller dt")
        return steps, dt
    return max(1, round(seq.tau / m.dt)), m.dt


def noisy_probe_signal(v0, v1, seq: PulseSequence, rho, m: NoiseModel,
                       pulses: bool = True) -> NoisyMeasurement:
    """Monte Carlo average of the probe readout under OU dephasing.

    Every realization propagates the full probe (x) dark state through the
    2N pulses with its own noise path.  With ``pulses=False`` the state
    evolves freely for the same total time 2N tau.
    """
    v0 = core.check_hermitian(v0)
    v1 = core.check_hermitian(v1)
    rho = core.validate_density(rho)
    d = v0.shape[0]
    steps, dt = _snap(seq, m)
    n_total = 2 * seq.n_segments * steps

    free = core.expm(core.full_hamiltonian(v0, v1), dt)
    # H commutes with sigma_z^p (x) 1, so exp(-i(H + b sz/2)dt) factorises
    sz = np.real(np.diag(np.kron(core.PROBE_SIGMA_Z, np.eye(d))))

    weights, vecs = np.linalg.eigh(rho)
    keep = weights > 1e-15
    weights, vecs = weights[keep], vecs[:, keep]
    psi0 = np.stack([np.kron(core.PROBE_PLUS, vecs[:, k]) for k in range(vecs.shape[1])])

    paths = np.empty((m.realizations, n_total))
    for i in range(m.realizations):
        paths[i] = ou_path(m.b0, m.tb, dt, n_total - 1, realization_rng(m.seed, i))

    # psi[r, k, :] for realization r and eigen-component k, row-vector convention
    psi = np.broadcast_to(psi0, (m.realizations,) + psi0.shape).copy()
    free_t = free.T
    step = 0
    blocks = [steps] * (2 * seq.n_segments) if pulses else [n_total]
    for block in blocks:
        for _ in range(block):
            phase = np.exp(-0.5j * dt * np.multiply.outer(paths[:, step], sz))
            psi = (psi * phase[:, None, :]) @ free_t
            step += 1
        if pulses:
            psi = np.concatenate([psi[..., d:], psi[..., :d]], axis=-1)

    # probe coherence <0|rho_p|1> summed over dark index
    coh = np.einsum("rki,rki->rk", psi[..., :d], psi[..., d:].conj())
    coh = coh @ weights
    sx = 2 * coh.real
    sy = -2 * coh.imag
    n = m.realizations
    err = (lambda a: float(a.std(ddof=1) / math.sqrt(n))) if n > 1 else (lambda a: 0.0)
    return NoisyMeasurement(float(sx.mean()), float(sy.mean()), err(sx), err(sy),
                            steps * dt, dt)


def noisy_spin_measurement(f: SpinFields, seq: PulseSequence, rho, m: NoiseModel,
                           pulses: bool = True) -> NoisyMeasurement:
    v0, v1 = f.operators()
    return noisy_probe_signal(v0, v1, seq, rho, m, pulses=pulses)


def accumulated_phases(m: NoiseModel, seq: PulseSequence, pulses: bool = True) -> np.ndarray:
    """Per-realization noise phase int b(t) s(t) dt, with s flipping at each pulse.

    Used as an independent check: realization by realization the probe
    coherence <0|rho_p|1> picks up exp(+i phase), i.e. the readout
    sx + i sy is the noiseless one times exp(-i phase).
    """
    steps, dt = _snap(seq, m)
    n_total = 2 * seq.n_segments * steps
    sign = np.ones(n_total)
    if pulses:
        sign = np.repeat(np.resize([1.0, -1.0], 2 * seq.n_segments), steps)
    out = np.empty(m.realizations)
    for i in range(m.realizations):
        b = ou_path(m.b0, m.tb, dt, n_total - 1, realization_rng(m.seed, i))
        out[i] = float(np.sum(b * sign) * dt)
    return out
