"""Dense linear-algebra kernel for probe-conditioned dark-system dynamics.

The combined system is ordered probe (x) dark.  Probe index 0 is |0>_p and
index 1 is |1>_p, so sigma_z^p = |1><1| - |0><0| and sigma_x^p, sigma_y^p are
the usual Pauli matrices in that basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotHermitianError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

PROBE_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
PROBE_P0 = np.diag([1.0, 0.0]).astype(complex)
PROBE_P1 = np.diag([0.0, 1.0]).astype(complex)
# sigma_z^p is diag(-1, +1) in the probe ordering (|0>_p, |1>_p)
PROBE_SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class PulseSequence:
    """2N instantaneous pi pulses separated by the free-evolution time ``tau``."""

    tau: float
    n_segments: int

    def __post_init__(self):
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if int(self.n_segments) != self.n_segments or self.n_segments < 1:
            raise ValueError(f"n_segments must be a positive integer, got {self.n_segments}")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "n_segments", int(self.n_segments))

    @property
    def total_time(self) -> float:
        return 2 * self.n_segments * self.tau


def _as_square(m, name="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def hermitian_deviation(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - h.conj().T), initial=0.0))


def check_hermitian(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``h`` as a complex array, raising if it is not Hermitian.

    The tolerance is relative to the largest entry so that generators in
    rad/s and in units of omega0 are treated alike.
    """
    h = _as_square(h, "generator")
    dev = hermitian_deviation(h)
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if dev > tol * scale:
        raise NotHermitianError(dev, tol * scale)
    return h


def expm(h, t: float) -> np.ndarray:
    """exp(-i H t) for Hermitian H via its eigendecomposition."""
    h = check_hermitian(h)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def segment_propagators(v0, v1, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Single-segment operators u0 = e^{-iV1 tau} e^{-iV0 tau}, u1 = e^{-iV0 tau} e^{-iV1 tau}."""
    v0 = check_hermitian(v0)
    v1 = check_hermitian(v1)
    if v0.shape != v1.shape:
        raise DimensionError(f"V0 {v0.shape} and V1 {v1.shape} differ in dimension")
    e0 = expm(v0, tau)
    e1 = expm(v1, tau)
    return e1 @ e0, e0 @ e1


def sequence_propagators(v0, v1, seq: PulseSequence) -> tuple[np.ndarray, np.ndarray]:
    """Dark-system evolution operators U0 = u0^N and U1 = u1^N of the pulsed sequence."""
    u0, u1 = segment_propagators(v0, v1, seq.tau)
    n = seq.n_segments
    return np.linalg.matrix_power(u0, n), np.linalg.matrix_power(u1, n)


def probe_expectations(u0, u1, rho) -> tuple[float, float]:
    """Probe readout (<sigma_x^p>, <sigma_y^p>) = (Re, Im) of Tr{U0^dag U1 rho}."""
    u0 = np.asarray(u0, dtype=complex)
    u1 = np.asarray(u1, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if not (u0.shape == u1.shape == rho.shape):
        raise DimensionError(f"shape mismatch: U0 {u0.shape}, U1 {u1.shape}, rho {rho.shape}")
    z = np.trace(u0.conj().T @ u1 @ rho)
    return float(z.real), float(z.imag)


def validate_density(rho, tol: float = HERMITIAN_TOL, psd_tol: float = 1e-10) -> np.ndarray:
    rho = _as_square(rho, "density matrix")
    scale = max(1.0, float(np.max(np.abs(rho))))
    if hermitian_deviation(rho) > tol * scale:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol * rho.shape[0]:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.15g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -psd_tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def trace_distance(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare {a.shape} with {b.shape}")
    diff = a - b
    diff = (diff + diff.conj().T) / 2
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def partial_trace_probe(rho_full) -> np.ndarray:
    """Reduced 2x2 probe state of a probe (x) dark density matrix."""
    rho_full = _as_square(rho_full, "full density matrix")
    dim = rho_full.shape[0]
    if dim % 2:
        raise DimensionError(f"total dimension {dim} is odd; expected 2*d")
    d = dim // 2
    return np.einsum("ajbj->ab", rho_full.reshape(2, d, 2, d))


def partial_trace_dark(rho_full) -> np.ndarray:
    rho_full = _as_square(rho_full, "full density matrix")
    dim = rho_full.shape[0]
    if dim % 2:
        raise DimensionError(f"total dimension {dim} is odd; expected 2*d")
    d = dim // 2
    return np.einsum("aiaj->ij", rho_full.reshape(2, d, 2, d))


def full_hamiltonian(v0, v1) -> np.ndarray:
    """H = |0><0|_p (x) V0 + |1><1|_p (x) V1 on the probe (x) dark space."""
    return np.kron(PROBE_P0, v0) + np.kron(PROBE_P1, v1)


def probe_pulse(d: int) -> np.ndarray:
    return np.kron(SIGMA_X, np.eye(d, dtype=complex))


def propagate_full(v0, v1, seq: PulseSequence, rho) -> np.ndarray:
    """Brute-force evolution of |+><+|_p (x) rho with explicit pi pulses.

    Each segment is free evolution, pi pulse, free evolution, pi pulse.
    Returns the full probe (x) dark density matrix after 2N pulses.
    """
    v0 = check_hermitian(v0)
    v1 = check_hermitian(v1)
    rho = np.asarray(rho, dtype=complex)
    d = v0.shape[0]
    if v1.shape != v0.shape or rho.shape != v0.shape:
        raise DimensionError("V0, V1 and rho must share one dimension")
    free = expm(full_hamiltonian(v0, v1), seq.tau)
    x = probe_pulse(d)
    segment = x @ free @ x @ free
    total = np.linalg.matrix_power(segment, seq.n_segments)
    state = np.kron(np.outer(PROBE_PLUS, PROBE_PLUS.conj()), rho)
    return total @ state @ total.conj().T


def probe_bloch(rho_probe) -> tuple[float, float, float]:
    """(<sigma_x^p>, <sigma_y^p>, <sigma_z^p>) of a reduced probe state."""
    rho_probe = np.asarray(rho_probe)
    sx = np.trace(SIGMA_X @ rho_probe).real
    sy = np.trace(SIGMA_Y @ rho_probe).real
    sz = np.trace(PROBE_SIGMA_Z @ rho_probe).real
    return float(sx), float(sy), float(sz)


def brute_force_expectations(v0, v1, seq: PulseSequence, rho) -> tuple[float, float]:
    """Full-space oracle for :func:`probe_expectations`."""
    sx, sy, _ = probe_bloch(partial_trace_probe(propagate_full(v0, v1, seq, rho)))
    return sx, sy


def bloch_density(r) -> np.ndarray:
    """Spin-1/2 density matrix (1 + r.sigma)/2."""
    r = np.asarray(r, dtype=float)
    return (IDENTITY2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z) / 2


def bloch_vector(rho) -> np.ndarray:
    rho = np.asarray(rho)
    return np.array([np.trace(p @ rho).real for p in PAULI])
