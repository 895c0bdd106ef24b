"""Two coupled dark spins read out through their zero-magnetisation subspace.

In span{|01>, |10>} the pair behaves as a pseudo-spin with
V0 = (A_x/2) sx~ and V1 = (A_x/2) sx~ + (A_z/2) sz~, A_z = a_z1 - a_z2.
This is the single-spin problem with x and z exchanged, so the spin
closed form applies after relabelling.  Dark-spin Paulis use
sigma_z = diag(1, -1) on (|0>, |1>); the pseudo-spin basis is (|01>, |10>).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import core
from .core import PulseSequence
from .errors import SettingsError
from .spin import SpinFields, measurement_settings_y, spin_observable

SUBSPACE = (1, 2)  # |01>, |10> in the |s1 s2> computational ordering


@dataclass(frozen=True)
class TwoSpinParams:
    omega0: float
    A_x: float
    a_z1: float
    a_z2: float
    a_x1: float
    a_x2: float

    @property
    def A_z(self) -> float:
        return self.a_z1 - self.a_z2

    @property
    def A(self) -> float:
        return math.hypot(self.A_x, self.A_z)

    @property
    def max_coupling(self) -> float:
        return max(abs(self.a_z1), abs(self.a_z2), abs(self.a_x1), abs(self.a_x2), abs(self.A_x))

    @property
    def weak_coupling(self) -> bool:
        return self.max_coupling <= 0.1 * abs(self.omega0)

    def operators(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact 4x4 V0 = H_d and V1 = H_d + H_1 with no secular approximation."""
        i2 = core.IDENTITY2
        sx, sz = core.SIGMA_X, core.SIGMA_Z
        h_d = (self.omega0 / 2 * (np.kron(sz, i2) + np.kron(i2, sz))
               + self.A_x / 2 * np.kron(sx, sx))
        h_1 = (self.a_z1 / 2 * np.kron(sz, i2) + self.a_x1 / 2 * np.kron(sx, i2)
               + self.a_z2 / 2 * np.kron(i2, sz) + self.a_x2 / 2 * np.kron(i2, sx))
        return h_d, h_d + h_1

    def pseudo_operators(self) -> tuple[np.ndarray, np.ndarray]:
        v0 = self.A_x / 2 * core.SIGMA_X
        return v0, v0 + self.A_z / 2 * core.SIGMA_Z


def pseudo_spin_fields(p: TwoSpinParams) -> SpinFields:
    """Single-spin fields whose closed form describes the pseudo-spin.

    omega0 -> A_x, omega1 -> A, v_x = A_z/A, v_z = A_x/A; that is
    SpinFields(omega0=A_x, a_z=0, a_x=A_z) in the relabelled frame.
    """
    if p.A == 0:
        raise SettingsError("A = 0: the pseudo-spin potentials vanish, no contrast")
    return SpinFields(omega0=p.A_x, a_z=0.0, a_x=p.A_z)


def to_pseudo_axis(w) -> np.ndarray:
    """Map a spin-frame vector to the pseudo-spin frame.

    Exchanging x and z alone is a reflection; the y component flips so that
    the Pauli algebra is preserved.
    """
    w = np.asarray(w, dtype=float)
    return np.array([w[2], -w[1], w[0]])


def pseudo_observable(p: TwoSpinParams, seq: PulseSequence):
    """cos(phi) and sin(phi) n~ of the pseudo-spin."""
    obs = spin_observable(pseudo_spin_fields(p), seq)
    return obs.cos_phi, to_pseudo_axis(obs.weighted_axis)


def project_subspace(rho2) -> tuple[np.ndarray, float]:
    """2x2 block of ``rho2`` on span{|01>, |10>} and its population."""
    rho2 = np.asarray(rho2, dtype=complex)
    idx = np.array(SUBSPACE)
    block = rho2[np.ix_(idx, idx)]
    return block, float(np.trace(block).real)


def witnesses(rho2) -> tuple[float, float]:
    """r~x = <sx sx + sy sy>/2 and r~y = <sy sx - sx sy>/2."""
    rho2 = np.asarray(rho2, dtype=complex)
    sx, sy = core.SIGMA_X, core.SIGMA_Y
    wx = (np.kron(sx, sx) + np.kron(sy, sy)) / 2
    wy = (np.kron(sy, sx) - np.kron(sx, sy)) / 2
    return float(np.trace(wx @ rho2).real), float(np.trace(wy @ rho2).real)


def pseudo_bloch(rho2) -> np.ndarray:
    """Unnormalised pseudo-spin Bloch vector Tr{sigma~ P rho P}."""
    block, _ = project_subspace(rho2)
    return core.bloch_vector(block)


class WitnessResult(NamedTuple):
    sy_closed: float
    sy_oracle: float
    abs_err: float
    subspace_population: float
    leakage: float  # population change of |00>, |11> in the oracle


def witness_measurement(p: TwoSpinParams, seq: PulseSequence, rho2,
                        min_population: float = 0.01) -> WitnessResult:
    """Closed pseudo-spin prediction of <sigma_y^p> against the full 8-dim propagation."""
    rho2 = core.validate_density(rho2)
    block, pop = project_subspace(rho2)
    if pop < min_population:
        warnings.warn(f"subspace population {pop:.3g} is below {min_population}; low signal",
                      stacklevel=2)
    _, weighted = pseudo_observable(p, seq)
    sy_closed = -float(weighted @ core.bloch_vector(block))

    v0, v1 = p.operators()
    full = core.propagate_full(v0, v1, seq, rho2)
    sx_o, sy_o, _ = core.probe_bloch(core.partial_trace_probe(full))
    dark = core.partial_trace_dark(full)
    outside = [0, 3]
    leak = float(abs(np.real(dark[outside, outside]).sum() - np.real(rho2[outside, outside]).sum()))
    return WitnessResult(sy_closed, sy_o, abs(sy_closed - sy_o), pop, leak)


def witness_settings(p: TwoSpinParams, n_max: int = 1000):
    """r~_y setting: the single-spin tau1 / N rule applied to the pseudo-spin fields."""
    return measurement_settings_y(pseudo_spin_fields(p), n_max=n_max)


def pseudo_settings(p: TwoSpinParams):
    """Three readout settings for the pseudo-spin, found on its relabelled fields."""
    from .spin import design_settings

    return design_settings(pseudo_spin_fields(p))


def pseudo_tomography(p: TwoSpinParams, rho2, settings=None) -> np.ndarray:
    """Pseudo-spin Bloch vector from oracle probe signals, inverted with the closed form.

    The result is Tr{sigma~ P rho P}, so its x and y components are the two
    witnesses whenever rho2 lives in the subspace.
    """
    rho2 = core.validate_density(rho2)
    settings = settings if settings is not None else pseudo_settings(p)
    if len(settings) != 3:
        raise ValueError("exactly three settings are required")
    seqs = [getattr(s, "seq", s) for s in settings]
    v0, v1 = p.operators()
    design = np.array([-pseudo_observable(p, s)[1] for s in seqs])
    measured = []
    for s in seqs:
        full = core.propagate_full(v0, v1, s, rho2)
        measured.append(core.probe_bloch(core.partial_trace_probe(full))[1])
    cond = np.linalg.cond(design)
    if not np.isfinite(cond) or cond > 1e6:
        raise SettingsError(f"pseudo-spin settings are singular (condition number {cond:.3g})")
    return np.linalg.solve(design, measured)
