"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class ChemotaxisLabError(Exception):
    """Base class for all package errors."""


class ShellNotResolvable(ChemotaxisLabError):
    """A dyadic annulus reaches beyond the Nyquist frequency of the grid."""


class EmptyTrace(ChemotaxisLabError):
    """A time-sampled operation received no samples."""


class NonHermitianSymbol(ChemotaxisLabError):
    """A multiplier would map a real field to a complex one."""


class NegativeTime(ChemotaxisLabError):
    """Backward heat flow was requested."""


class BetaUnresolvable(ChemotaxisLabError):
    """The support radius of the bump transform is too small for the lattice."""


class ConstraintViolation(ChemotaxisLabError):
    """Construction parameters push the data spectrum off the base plateau."""


class OffsetCollision(ChemotaxisLabError):
    """Two atoms sit closer than the separation threshold."""


class NonContraction(ChemotaxisLabError):
    """Picard iteration for the remainder rung failed to contract."""


class BlowupDetected(ChemotaxisLabError):
    """The solver state exceeded the overflow guard.

    Parameters
    ----------
    message : str
        Human readable description.
    time : float
        Simulation time at which the guard fired.
    """

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:.6e})")
        self.time = time


class CFLViolation(ChemotaxisLabError):
    """The explicit part of a time step is outside its stability region."""


class SeparationNotCalibrated(ChemotaxisLabError):
    """A check requiring calibrated offsets ran without a calibration."""


class ExponentConstraintViolated(ChemotaxisLabError):
    """Exponents passed to a product law break its hypotheses."""


class ParseError(ChemotaxisLabError):
    """A configuration file could not be parsed."""


class ValidationError(ChemotaxisLabError):
    """A configuration failed validation.

    Parameters
    ----------
    problems : list of str
        Every violation found, each prefixed with its source line when known.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class IoError(ChemotaxisLabError):
    """Writing or reading an artifact failed."""
