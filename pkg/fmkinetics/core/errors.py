from __future__ import annotations


class FlowKineticsError(Exception):
    """Base class for every error raised by fmkinetics."""


class DomainError(FlowKineticsError, ValueError):
    """Raised when an argument lies outside an operation's domain."""


class DatasetValidationError(FlowKineticsError, ValueError):
    """Raised when loaded points or Gaussian parameters are malformed."""


class ScheduleError(FlowKineticsError, ValueError):
    """Raised when a built-in schedule violates its boundary conditions."""


class InsufficientDataError(FlowKineticsError, ValueError):
    """Raised when a survival estimate has too few samples."""


class TailFitError(FlowKineticsError, ValueError):
    """Raised when the tail region cannot support a log-linear fit."""


class NumericalError(FlowKineticsError, ArithmeticError):
    """Raised when a matrix leaves the SPD contract or a solve is singular."""


class IntegrationDivergedError(FlowKineticsError, ArithmeticError):
    def __init__(self, step: int, sample_index: int | None = None) -> None:
        self.step = step
        self.sample_index = sample_index
        where = f" (sample {sample_index})" if sample_index is not None else ""
        super().__init__(f"integration diverged at step {step}{where}")

    def with_sample(self, sample_index: int) -> "IntegrationDivergedError":
        return IntegrationDivergedError(self.step, sample_index)


class ConfigError(FlowKineticsError, ValueError):
    def __init__(self, message: str, *, source: str | None = None, line: int | None = None) -> None:
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(f"{prefix}{message}")
