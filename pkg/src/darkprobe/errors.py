"""Exception hierarchy shared by all simulation modules."""


class DarkProbeError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(DarkProbeError, ValueError):
    pass


class NotHermitianError(DarkProbeError, ValueError):
    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        super().__init__(f"generator is not Hermitian: ||H - H^dag|| = {deviation:.3e} > {tol:.1e}")


class NumericalQualityError(DarkProbeError):
    """A computation finished but its result fails a documented quality gate."""


class DegenerateRotationError(NumericalQualityError):
    """Rotation angle is a multiple of pi, so the rotation axis is undefined."""


class SettingsError(NumericalQualityError):
    pass


class EstimationError(NumericalQualityError):
    pass


class TruncationError(NumericalQualityError):
    pass


class ReconstructionQualityError(NumericalQualityError):
    pass
