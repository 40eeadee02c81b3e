"""Exception types shared across the package."""


class StepanovError(Exception):
    """Base class for every error raised by this package."""


class ParseError(StepanovError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownIdentifierError(StepanovError):
    pass


class DomainError(StepanovError):
    """Evaluation left the domain of a function, or a point left the chart."""


class ManifestError(StepanovError):
    pass


class StructureError(ManifestError):
    """Structural inconsistency, e.g. an affinor on an odd-dimensional chart."""


class DegenerateMetricError(StepanovError):
    pass


class NotAMetricError(StepanovError):
    pass


class TensorError(StepanovError):
    pass


class VarianceError(TensorError):
    pass


class SlotError(TensorError):
    pass


class PreconditionError(StepanovError):
    """A verifier refuses to run because its hypotheses do not hold."""
