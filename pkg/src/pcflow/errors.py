"""Exception types shared across the package.

The CLI maps these onto process exit codes: parse errors -> 2, validation
errors -> 3, runtime (flow/solver) errors -> 4, io/checkpoint errors -> 5.
"""


class PcflowError(Exception):
    """Base class for all package errors."""


class BadGrid(PcflowError):
    """Grid sizes violate a backend requirement (powers of two, minimum size)."""


class NonPositiveDensity(PcflowError):
    """A reference density sample is <= 0."""


class ShapeError(PcflowError):
    """A field does not match the backend grid, or contains non-finite entries."""


class NotKahler(PcflowError):
    """A potential leaves the Kahler cone: min(rho) at or below the floor."""

    def __init__(self, min_rho, stage=None, message=None):
        self.min_rho = float(min_rho)
        self.stage = stage
        text = message or f"min(rho) = {self.min_rho:.6g} at or below floor"
        if stage is not None:
            text += f" (stage {stage})"
        super().__init__(text)


class SingularSolve(PcflowError):
    """The linear solve failed structurally (singular factorization)."""


class ToleranceNotMet(PcflowError):
    """An elliptic solve residual stayed above the requested tolerance."""


class ConfigParseError(PcflowError):
    """A config line is syntactically malformed."""

    def __init__(self, line_no, message):
        self.line_no = int(line_no)
        super().__init__(f"line {self.line_no}: {message}")


class ConfigValidationError(PcflowError):
    """A config key/value is semantically invalid (unknown key, out of range)."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class CheckpointError(PcflowError):
    """A checkpoint file is unreadable: bad magic, version, size, or CRC."""
