"""Named parameter sets for the reproduced figures and the two physical platforms.

Frequencies are stored as ordinary frequencies (Hz, or units of omega0/2pi
for the dimensionless fixtures); ``angular`` converts to rad/s.
"""

from __future__ import annotations

import math

TWO_PI = 2 * math.pi
GAMMA_C13_OVER_2PI = 10.705e6  # Hz/T

FIXTURES: dict[str, dict] = {
    "fig1-nv": {
        "description": "dimensionless single-spin fixture, couplings in units of omega0",
        "omega0_over_2pi": 1.0,
        "a_z_over_omega0": 0.015,
        "a_x_over_omega0": 0.08,
        "n_segments": 10,
    },
    "nv-lab": {
        "description": "NV electron probing a 13C nucleus",
        "a_parallel_over_2pi": 2.54e3,
        "a_perp_over_2pi": 13.22e3,
        "field_tesla": 15.4e-3,
        "gamma_over_2pi": GAMMA_C13_OVER_2PI,
    },
    "yb-trap": {
        "description": "trapped Yb+ ion, motional mode as the dark oscillator",
        "nu_over_2pi": 117e3,
        "g_over_nu": 0.072,
    },
    "fig2": {
        "description": "oscillator reconstruction fixtures",
        "g_over_nu": 3 / 40,
        "squeeze_lambda": math.log(0.5),
        "coherent_eta": 1.0,
        "n_max": 20,
    },
    "figS3": {
        "description": "OU noise grid for the pulsed <sigma_y> measurement on nv-lab",
        "tb_seconds": [0.2e-3, 0.5e-3, 1e-3],
        "b0_over_2pi": [9e3, 28e3, 56e3, 112e3],
        "n_segments": 10,
        "tau_seconds": 3e-6,
        "bloch": [0.0, 0.4, 0.0],
        "realizations": 1000,
    },
    "figS4": {
        "description": "Fock-state benchmark, curves N = 1..N~",
        "g_over_nu": 3 / 40,
        "fock_n": [0, 1, 2],
        "n_tilde": list(range(1, 21)),
    },
}


def angular(f_over_2pi: float) -> float:
    return TWO_PI * f_over_2pi


def nv_lab_fields():
    """SpinFields (rad/s) for the nv-lab fixture: omega0 = gamma_C B."""
    from .spin import SpinFields

    fx = FIXTURES["nv-lab"]
    omega0 = angular(fx["gamma_over_2pi"] * fx["field_tesla"])
    return SpinFields(omega0, angular(fx["a_parallel_over_2pi"]), angular(fx["a_perp_over_2pi"]))


def fig1_fields():
    from .spin import SpinFields

    fx = FIXTURES["fig1-nv"]
    omega0 = angular(fx["omega0_over_2pi"])
    return SpinFields(omega0, fx["a_z_over_omega0"] * omega0, fx["a_x_over_omega0"] * omega0)


def format_catalog() -> str:
    lines = []
    for name, params in FIXTURES.items():
        lines.append(f"{name}: {params['description']}")
        for key, value in params.items():
            if key != "description":
                lines.append(f"    {key} = {value}")
    return "\n".join(lines)
