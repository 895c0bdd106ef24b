"""Indirect measurement of inaccessible ("dark") quantum systems through a pulsed probe qubit."""

__version__ = "0.1.0"

from .core import PulseSequence
from .errors import DarkProbeError, NumericalQualityError
from .fock import OscState
from .noise import NoiseModel
from .oscillator import OscParams
from .spin import SpinFields
from .twospin import TwoSpinParams

__all__ = [
    "DarkProbeError",
    "NoiseModel",
    "NumericalQualityError",
    "OscParams",
    "OscState",
    "PulseSequence",
    "SpinFields",
    "TwoSpinParams",
    "__version__",
]
