"""Truncated Fock-space primitives: Laguerre polynomials, displacement
matrix elements, and the oscillator fixture states."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DarkProbeError


def laguerre(m: int, k: int, x):
    """Generalized Laguerre polynomial L_m^(k)(x) by three-term recurrence.

    (j+1) L_{j+1} = (2j + 1 + k - x) L_j - (j + k) L_{j-1}
    """
    if m < 0:
        raise ValueError("order m must be non-negative")
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for j in range(m):
        prev, cur = cur, ((2 * j + 1 + k - x) * cur - (j + k) * prev) / (j + 1)
    return cur if cur.ndim else float(cur)


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim)).astype(complex)


def displacement_sum(xi, weights, dim: int) -> np.ndarray:
    """Weighted sum of displacement matrices, sum_p w_p <n|D(xi_p)|m>.

    Uses the closed form
        <n|D(eta)|m> = sqrt(m!/n!) eta^(n-m) L_m^(n-m)(|eta|^2) exp(-|eta|^2/2),  n >= m,
    with eta -> -eta* and n <-> m below the diagonal.  Each diagonal k = n - m
    is built by running the Laguerre recurrence over m, vectorised over the
    points, with the factorial ratio and the power of |eta| taken in log space.
    """
    xi = np.asarray(xi, dtype=complex).ravel()
    weights = np.broadcast_to(np.asarray(weights, dtype=complex), xi.shape).ravel()
    if dim < 1:
        raise ValueError("dim must be positive")
    x = np.abs(xi) ** 2
    with np.errstate(divide="ignore"):
        log_r = np.log(np.abs(xi))
    arg = np.angle(xi)
    gauss = weights * np.exp(-x / 2)
    lgam = gammaln(np.arange(2 * dim) + 1.0)
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        if k == 0:
            upper = lower = gauss
        else:
            mag = np.exp(k * log_r)
            upper = gauss * mag * np.exp(1j * k * arg)
            # (-eta*)^k = |eta|^k exp(i k (pi - arg))
            lower = gauss * mag * np.exp(1j * k * (np.pi - arg))
        prev = np.zeros_like(x)
        cur = np.ones_like(x)
        for m in range(dim - k):
            scale = math.exp(0.5 * (lgam[m] - lgam[m + k]))
            out[m + k, m] = scale * np.dot(upper, cur)
            if k:
                out[m, m + k] = scale * np.dot(lower, cur)
            prev, cur = cur, ((2 * m + 1 + k - x) * cur - (m + k) * prev) / (m + 1)
    return out


def displacement_matrix(xi: complex, dim: int) -> np.ndarray:
    """Truncation of D(xi) = exp(xi a^dag - xi* a) to the lowest ``dim`` Fock states."""
    return displacement_sum(np.array([xi]), np.array([1.0]), dim)


# fixture states


@dataclass(frozen=True)
class OscState:
    """Named oscillator fixture: fock(n), coherent(eta) or squeezed(lam)."""

    kind: str
    n: int = 0
    eta: complex = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fock", "coherent", "squeezed"):
            raise DarkProbeError(f"unknown fixture state {self.kind!r}")

    @classmethod
    def fock(cls, n: int) -> "OscState":
        return cls("fock", n=int(n))

    @classmethod
    def coherent(cls, eta: complex) -> "OscState":
        return cls("coherent", eta=complex(eta))

    @classmethod
    def squeezed(cls, lam: float) -> "OscState":
        return cls("squeezed", lam=float(lam))

    @property
    def label(self) -> str:
        if self.kind == "fock":
            return f"fock({self.n})"
        if self.kind == "coherent":
            return f"coherent({self.eta.real:g}{self.eta.imag:+g}j)"
        return f"squeezed({self.lam:g})"

    def amplitudes(self, dim: int) -> np.ndarray:
        """Fock amplitudes of the (pure) fixture, truncated to ``dim``."""
        c = np.zeros(dim, dtype=complex)
        n = np.arange(dim)
        if self.kind == "fock":
            if self.n >= dim:
                raise DarkProbeError(f"fock({self.n}) does not fit in dimension {dim}")
            c[self.n] = 1.0
        elif self.kind == "coherent":
            r = abs(self.eta)
            if r == 0:
                c[0] = 1.0
            else:
                c = np.exp(-r * r / 2 + n * math.log(r) - 0.5 * gammaln(n + 1.0)) * np.exp(
                    1j * n * np.angle(self.eta))
        else:
            # S(lam)|0> with S = exp[(lam* a^2 - lam a^dag^2)/2], lam real
            t = -math.tanh(self.lam)
            for j in range(0, (dim + 1) // 2):
                mag = 0.5 * gammaln(2 * j + 1.0) - j * math.log(2) - gammaln(j + 1.0)
                c[2 * j] = (t ** j) * math.exp(mag)
            c /= math.sqrt(math.cosh(self.lam))
        return c

    def density(self, dim: int) -> np.ndarray:
        c = self.amplitudes(dim)
        return np.outer(c, c.conj())

    def chi(self, xi):
        """Characteristic function Tr{D(xi) rho} in closed form."""
        xi = np.asarray(xi, dtype=complex)
        x = np.abs(xi) ** 2
        if self.kind == "fock":
            return laguerre(self.n, 0, x) * np.exp(-x / 2)
        if self.kind == "coherent":
            eta = self.eta
            return np.exp(-x / 2 + xi * np.conj(eta) - np.conj(xi) * eta)
        # S^dag D(xi) S = D(xi cosh(lam) + xi* sinh(lam))
        e = math.exp(self.lam)
        return np.exp(-((xi.real * e) ** 2 + (xi.imag / e) ** 2) / 2)


def chi_exact(state: OscState | str, xi, **params):
    """Closed-form characteristic function of a named fixture.

    ``state`` is an :class:`OscState` or one of "fock", "coherent",
    "squeezed" with its parameter passed as a keyword (n, eta, lam).
    """
    if isinstance(state, str):
        state = OscState(state, **params)
    return state.chi(xi)
