from typing import Optional


class MFGJumpError(Exception):
    """Base class for numerical failures raised by the engines."""
    pass


class JumpLawError(MFGJumpError):
    pass


class DomainError(MFGJumpError):
    """Evaluation outside [0, T], inside a blown-up region, or with invalid analytic input."""
    pass


class BlowUpError(MFGJumpError):
    def __init__(self, message: str, blowup_time: Optional[float] = None):
        super().__init__(message)
        self.blowup_time = blowup_time


class UnsupportedHypothesisError(MFGJumpError):
    pass


class ResonanceError(MFGJumpError):
    pass


class AliasingError(MFGJumpError):
    def __init__(self, message: str, edge_magnitude: float):
        super().__init__(message)
        self.edge_magnitude = edge_magnitude


class StepSizeError(MFGJumpError):
    def __init__(self, message: str, admissible_dt: float):
        super().__init__(message)
        self.admissible_dt = admissible_dt


class MassLeakError(MFGJumpError):
    pass


class SimulationError(MFGJumpError):
    pass


class CheckpointError(MFGJumpError, LookupError):
    pass


class DegenerateCouplingError(MFGJumpError):
    pass
