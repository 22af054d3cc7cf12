"""Exception types shared across the analysis pipeline."""


class TrainDynError(Exception):
    """Base class for all traindyn errors."""


class ParseError(TrainDynError):
    """A trace file row/record could not be parsed."""


class SchemaError(TrainDynError):
    """A trace file violates the declared column/record schema."""


class DomainError(TrainDynError):
    """A value lies outside its admissible domain."""


class InsufficientData(TrainDynError):
    """Not enough usable data points for the requested computation."""


class DegenerateInput(TrainDynError):
    """Input is constant (or otherwise degenerate) where variation is required."""


class NumericalError(TrainDynError):
    """A numerical procedure failed beyond tolerance."""


class GenerationError(TrainDynError):
    """A synthetic-trace generator failed its own self-check."""
