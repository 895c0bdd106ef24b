"""Dark spin-1/2 probed through a pulsed two-level probe.

With V0 = (omega0/2) sz and V1 = (omega1/2)(v_x sx + v_z sz), every pulse
segment is a rotation u_k = exp(-i theta n_k.sigma) and the probe readout is
governed by U0^dag U1 = cos(phi) - i sin(phi) n.sigma:

    <sigma_x^p> = cos(phi),    <sigma_y^p> = -sin(phi) n.r

Three settings (tau, N) with linearly independent sin(phi) n therefore fix
the Bloch vector r.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import core
from .core import PulseSequence
from .errors import DegenerateRotationError, EstimationError, SettingsError

DEGENERATE_TOL = 1e-9
COS_PHI_TOL = 0.05


@dataclass(frozen=True)
class SpinFields:
    """Effective fields on the dark spin, all as angular frequencies.

    ``omega0`` is the bare splitting felt with the probe in |0>, ``a_z`` and
    ``a_x`` the extra field switched on with the probe in |1>.
    """

    omega0: float
    a_z: float
    a_x: float

    def __post_init__(self):
        if not all(np.isfinite([self.omega0, self.a_z, self.a_x])):
            raise ValueError("spin fields must be finite")
        if self.omega1 <= 0:
            raise ValueError("omega1 must be positive")

    @property
    def omega1(self) -> float:
        return math.hypot(self.omega0 + self.a_z, self.a_x)

    @property
    def v_x(self) -> float:
        return self.a_x / self.omega1

    @property
    def v_z(self) -> float:
        return (self.omega0 + self.a_z) / self.omega1

    @property
    def tau1(self) -> float:
        """First free-evolution time with anti-parallel segment axes."""
        return 2 * math.pi / (self.omega1 + self.omega0)

    def operators(self) -> tuple[np.ndarray, np.ndarray]:
        v0 = self.omega0 / 2 * core.SIGMA_Z
        v1 = self.omega1 / 2 * (self.v_x * core.SIGMA_X + self.v_z * core.SIGMA_Z)
        return v0, v1


class SegmentRotation(NamedTuple):
    theta: float
    n0: np.ndarray
    n1: np.ndarray


class AxisAngle(NamedTuple):
    angle: float
    axis: np.ndarray | None  # None when sin(angle) vanishes


class Observable(NamedTuple):
    cos_phi: float
    weighted_axis: np.ndarray  # sin(phi) * n


@dataclass(frozen=True)
class DesignedSetting:
    """A pulse sequence together with the readout it achieves."""

    component: str
    seq: PulseSequence
    cos_phi: float
    weighted_axis: np.ndarray = field(compare=False)

    @property
    def achieved(self) -> float:
        """sin(phi) n_k for the targeted component k."""
        return float(self.weighted_axis["xyz".index(self.component)])


@dataclass(frozen=True)
class SearchGrid:
    tau_max_factor: float = 3.0  # in units of tau1
    n_tau: int = 600
    n_max: int = 40
    cos_tol: float = COS_PHI_TOL

    def taus(self, tau1: float) -> np.ndarray:
        tau_max = self.tau_max_factor * tau1
        return np.linspace(tau_max / self.n_tau, tau_max, self.n_tau)


DEFAULT_GRID = SearchGrid()
# r_z only becomes accessible at long free-evolution times
DEFAULT_Z_GRID = SearchGrid(tau_max_factor=40.0, n_tau=8000, n_max=40)


def _segment_vectors(f: SpinFields, tau):
    """Unnormalised quaternion parts of u0: cos(theta) and sin(theta) n0."""
    alpha = f.omega0 * np.asarray(tau, dtype=float) / 2
    beta = f.omega1 * np.asarray(tau, dtype=float) / 2
    ca, sa, cb, sb = np.cos(alpha), np.sin(alpha), np.cos(beta), np.sin(beta)
    cos_theta = ca * cb - f.v_z * sa * sb
    p = f.v_x * ca * sb
    q = f.v_x * sa * sb
    r = sa * cb + f.v_z * ca * sb
    return cos_theta, p, q, r


def segment_rotation(f: SpinFields, tau: float) -> SegmentRotation:
    """Angle and axes of the two single-segment rotations.

    u0 = exp(-iV1 tau) exp(-iV0 tau) and u1 = exp(-iV0 tau) exp(-iV1 tau)
    rotate by the same angle about axes mirrored in the xz plane.

    Raises
    ------
    DegenerateRotationError
        If |sin(theta)| < 1e-9, where the axis is undefined.
    """
    cos_theta, p, q, r = (float(v) for v in _segment_vectors(f, tau))
    sin_theta = math.sqrt(p * p + q * q + r * r)
    if sin_theta < DEGENERATE_TOL:
        raise DegenerateRotationError(
            f"sin(theta) = {sin_theta:.2e} at tau = {tau!r}; perturb tau")
    theta = math.atan2(sin_theta, cos_theta)
    n0 = np.array([p, -q, r]) / sin_theta
    n1 = np.array([p, q, r]) / sin_theta
    return SegmentRotation(theta, n0, n1)


def composite_rotation(theta: float, n0, n1, n_segments: int) -> AxisAngle:
    """Write U0^dag U1 = exp(-i N theta n0.s)^dag exp(-i N theta n1.s) as one rotation."""
    n0 = np.asarray(n0, dtype=float)
    n1 = np.asarray(n1, dtype=float)
    s = math.sin(n_segments * theta)
    c = math.cos(n_segments * theta)
    cos_phi = c * c + s * s * float(n0 @ n1)
    weighted = s * c * (n1 - n0) - s * s * np.cross(n0, n1)
    sin_phi = float(np.linalg.norm(weighted))
    phi = math.atan2(sin_phi, cos_phi)
    if sin_phi < DEGENERATE_TOL:
        return AxisAngle(phi, None)
    return AxisAngle(phi, weighted / sin_phi)


def spin_observable(f: SpinFields, seq: PulseSequence) -> Observable:
    """cos(phi) and sin(phi) n for the pulsed sequence ``seq``."""
    rot = segment_rotation(f, seq.tau)
    s = math.sin(seq.n_segments * rot.theta)
    c = math.cos(seq.n_segments * rot.theta)
    cos_phi = c * c + s * s * float(rot.n0 @ rot.n1)
    weighted = s * c * (rot.n1 - rot.n0) - s * s * np.cross(rot.n0, rot.n1)
    return Observable(cos_phi, weighted)


def free_evolution_observable(f: SpinFields, tau: float) -> Observable:
    """Readout without pulses, U0^dag U1 = exp(iV0 tau) exp(-iV1 tau).

    This is u1 with alpha -> -alpha; its sin(phi) n lies inside a cylinder of
    radius v_x around z.
    """
    alpha = f.omega0 * tau / 2
    beta = f.omega1 * tau / 2
    cos_phi = math.cos(alpha) * math.cos(beta) + f.v_z * math.sin(alpha) * math.sin(beta)
    weighted = np.array([
        f.v_x * math.cos(alpha) * math.sin(beta),
        -f.v_x * math.sin(alpha) * math.sin(beta),
        -math.sin(alpha) * math.cos(beta) + f.v_z * math.cos(alpha) * math.sin(beta),
    ])
    return Observable(cos_phi, weighted)


def unitary_from_observable(obs: Observable) -> np.ndarray:
    w = obs.weighted_axis
    return obs.cos_phi * core.IDENTITY2 - 1j * sum(wk * p for wk, p in zip(w, core.PAULI))


def brute_force_observable(f: SpinFields, seq: PulseSequence) -> Observable:
    """Same quantities from explicit 2x2 propagation."""
    v0, v1 = f.operators()
    u0, u1 = core.sequence_propagators(v0, v1, seq)
    w = u0.conj().T @ u1
    cos_phi = np.trace(w).real / 2
    weighted = np.array([(1j * np.trace(w @ p) / 2).real for p in core.PAULI])
    return Observable(float(cos_phi), weighted)


def scan_observable(f: SpinFields, taus, ns) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised closed form over a (N, tau) grid.

    Returns ``cos_phi`` with shape (len(ns), len(taus)) and the weighted axis
    with shape (3, len(ns), len(taus)).  Grid points where the segment axis is
    degenerate are filled in by 2x2 propagation.
    """
    taus = np.asarray(taus, dtype=float)
    ns = np.asarray(ns, dtype=int)
    cos_theta, p, q, r = _segment_vectors(f, taus)
    sin_theta = np.sqrt(p * p + q * q + r * r)
    bad = sin_theta < DEGENERATE_TOL
    safe = np.where(bad, 1.0, sin_theta)
    theta = np.arctan2(sin_theta, cos_theta)
    n0 = np.stack([p, -q, r]) / safe
    n1 = np.stack([p, q, r]) / safe
    dot = np.sum(n0 * n1, axis=0)
    cross = np.cross(n0, n1, axis=0)

    nt = np.multiply.outer(ns, theta)
    s, c = np.sin(nt), np.cos(nt)
    cos_phi = c * c + s * s * dot
    weighted = (s * c)[None] * (n1 - n0)[:, None, :] - (s * s)[None] * cross[:, None, :]
    for j in np.flatnonzero(bad):
        for i, n in enumerate(ns):
            obs = brute_force_observable(f, PulseSequence(taus[j], int(n)))
            cos_phi[i, j] = obs.cos_phi
            weighted[:, i, j] = obs.weighted_axis
    return cos_phi, weighted


def measurement_settings_y(f: SpinFields, n_max: int = 1000) -> DesignedSetting:
    """tau1 = 2 pi/(omega1 + omega0) and N = round(pi / 4 v_x)."""
    if f.v_x == 0:
        raise SettingsError("a_x = 0: r_y is not measurable (V0 and V1 commute)")
    n = max(1, round(math.pi / (4 * abs(f.v_x))))
    if n > n_max:
        raise SettingsError(
            f"r_y setting needs N = {n} > N_max = {n_max}; a larger a_x is required")
    seq = PulseSequence(f.tau1, n)
    obs = spin_observable(f, seq)
    return DesignedSetting("y", seq, obs.cos_phi, obs.weighted_axis)


def search_setting(f: SpinFields, component: str, grid: SearchGrid = DEFAULT_GRID,
                   min_achieved: float = 0.9) -> DesignedSetting:
    """Grid point maximising |sin(phi) n_k| subject to |cos(phi)| <= cos_tol."""
    k = "xyz".index(component)
    taus = grid.taus(f.tau1)
    ns = np.arange(1, grid.n_max + 1)
    cos_phi, weighted = scan_observable(f, taus, ns)
    score = np.where(np.abs(cos_phi) <= grid.cos_tol, np.abs(weighted[k]), -1.0)
    i, j = np.unravel_index(np.argmax(score), score.shape)
    if score[i, j] <= 0:
        raise SettingsError(
            f"no grid point reaches |cos phi| <= {grid.cos_tol} with nonzero sin(phi) n_{component}; "
            "r_{component} is not measurable with these fields")
    best = DesignedSetting(component, PulseSequence(taus[j], int(ns[i])),
                           float(cos_phi[i, j]), weighted[:, i, j].copy())
    if abs(best.achieved) < min_achieved:
        warnings.warn(
            f"best r_{component} setting only reaches |sin(phi) n_{component}| = "
            f"{abs(best.achieved):.3f} (tau = {best.seq.tau:.6g}, N = {best.seq.n_segments})",
            stacklevel=2)
    return best


def measurement_settings_x(f: SpinFields, grid: SearchGrid = DEFAULT_GRID) -> DesignedSetting:
    return search_setting(f, "x", grid)


def measurement_settings_z(f: SpinFields, grid: SearchGrid = DEFAULT_Z_GRID) -> DesignedSetting:
    return search_setting(f, "z", grid, min_achieved=0.0)


def design_settings(f: SpinFields, x_grid: SearchGrid = DEFAULT_GRID,
                    z_grid: SearchGrid = DEFAULT_Z_GRID) -> list[DesignedSetting]:
    return [measurement_settings_x(f, x_grid), measurement_settings_y(f),
            measurement_settings_z(f, z_grid)]


@dataclass(frozen=True)
class BlochReconstruction:
    r: np.ndarray
    clipped: bool
    condition_number: float
    design_matrix: np.ndarray


def reconstruct_bloch(settings: Sequence[PulseSequence | DesignedSetting], f: SpinFields,
                      measured_sy: Sequence[float], cond_limit: float = 100.0) -> BlochReconstruction:
    """Invert <sigma_y^p>_i = -(sin(phi) n)_i . r for three settings."""
    if len(settings) != 3 or len(measured_sy) != 3:
        raise ValueError("exactly three settings and three measurements are required")
    seqs = [s.seq if isinstance(s, DesignedSetting) else s for s in settings]
    m = np.array([-spin_observable(f, s).weighted_axis for s in seqs])
    u, sv, vh = np.linalg.svd(m)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        null = [vh[i] for i in range(3) if sv[i] <= 1e-12 * max(sv[0], 1e-300)]
        dirs = ", ".join(np.array2string(v, precision=4) for v in null)
        raise SettingsError(f"settings are linearly dependent; unresolved directions: {dirs}")
    cond = float(sv[0] / sv[-1])
    if cond > cond_limit:
        warnings.warn(f"design matrix condition number {cond:.1f} exceeds {cond_limit}", stacklevel=2)
    r = np.linalg.solve(m, np.asarray(measured_sy, dtype=float))
    norm = float(np.linalg.norm(r))
    clipped = norm > 1
    if clipped:
        r = r / norm
    return BlochReconstruction(r, clipped, cond, m)


def simulate_sy(f: SpinFields, seq: PulseSequence, r) -> float:
    """Noiseless <sigma_y^p> from matrix propagation of the Bloch state r."""
    v0, v1 = f.operators()
    u0, u1 = core.sequence_propagators(v0, v1, seq)
    return core.probe_expectations(u0, u1, core.bloch_density(r))[1]


# coupling-constant estimation


@dataclass(frozen=True)
class CosPhiScan:
    """<sigma_x^p> = cos(phi) sampled on a (N, tau) grid, shape (len(ns), len(taus))."""

    taus: np.ndarray
    ns: np.ndarray
    cos_phi: np.ndarray

    def __post_init__(self):
        shape = (len(self.ns), len(self.taus))
        if np.shape(self.cos_phi) != shape:
            raise ValueError(f"cos_phi must have shape {shape}, got {np.shape(self.cos_phi)}")


def cos_phi_scan(f: SpinFields, taus, ns) -> CosPhiScan:
    taus = np.asarray(taus, dtype=float)
    ns = np.asarray(ns, dtype=int)
    return CosPhiScan(taus, ns, scan_observable(f, taus, ns)[0])


@dataclass(frozen=True)
class CouplingEstimate:
    a_z: float
    a_x: float
    tau1: float
    omega1: float
    n_opt: int
    n_used: int  # pulse number whose tau sweep located the dip


def _parabolic_vertex(x, y, i) -> float:
    if i == 0 or i == len(x) - 1:
        return float(x[i])
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
    if a <= 0:
        return float(x1)
    return float(-b / (2 * a))


def estimate_coupling(scan: CosPhiScan, omega0: float, min_contrast: float = 1e-3) -> CouplingEstimate:
    """Recover (a_z, a_x) from a cos(phi) scan, given the bare splitting.

    The tau sweep with the deepest dip fixes tau1 (refined by a parabola
    through the three lowest samples); the pulse number minimising |cos phi|
    at tau1 fixes v_x.  a_x is reported non-negative because only v_x^2
    enters cos(phi).
    """
    cos_phi = np.asarray(scan.cos_phi, dtype=float)
    contrast = cos_phi.max(axis=1) - cos_phi.min(axis=1)
    if contrast.max() < min_contrast:
        raise EstimationError(
            f"scan has no contrast (max {contrast.max():.2e} < {min_contrast}); "
            "the couplings cannot be extracted")
    row = int(np.argmin(np.where(contrast >= min_contrast, cos_phi.min(axis=1), np.inf)))
    j = int(np.argmin(cos_phi[row]))
    tau1 = _parabolic_vertex(scan.taus, cos_phi[row], j)
    omega1 = 2 * math.pi / tau1 - omega0

    at_tau1 = np.array([np.interp(tau1, scan.taus, cos_phi[i]) for i in range(len(scan.ns))])
    n_opt = int(scan.ns[int(np.argmin(np.abs(at_tau1)))])
    a_x = omega1 * math.pi / (4 * n_opt)
    if omega1 <= a_x:
        raise EstimationError(f"inconsistent estimate: omega1 = {omega1:.6g} <= a_x = {a_x:.6g}")
    a_z = math.sqrt(omega1**2 - a_x**2) - omega0
    return CouplingEstimate(a_z, a_x, tau1, omega1, n_opt, int(scan.ns[row]))
