"""Exception types shared across the package."""


class PdakitError(Exception):
    """Base class for all pdakit errors."""


class MalformedGrid(PdakitError):
    """Raw array input is not a rectangular grid of stars and positive integers."""


class InvalidParameter(PdakitError):
    """A numeric argument is outside its legal range."""


class InvalidPda(PdakitError):
    """An array claimed to be a placement delivery array fails validation."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class DegreeViolation(PdakitError):
    """User-side vertices of a bipartite graph do not all have the same degree."""


class ColoringViolation(PdakitError):
    """An edge coloring is not a strong edge coloring."""


class IncompleteColoring(PdakitError):
    """An operation requiring a fully colored graph found an uncolored edge."""


class InvalidPlacement(PdakitError):
    """A per-column star pattern does not match the declared star count."""


class LengthMismatch(PdakitError):
    """Paired sequences have different lengths."""


class ShapeError(PdakitError):
    """Tensor shapes passed to a network operation are inconsistent."""


class VocabularyError(PdakitError):
    """An edge index falls outside the embedding table of the model."""


class NoFeasibleAction(PdakitError):
    """Every pointer position is masked out at a decode step."""


class InvalidPointer(PdakitError):
    """A pointer choice refers to a position after the current step."""


class BadTarget(PdakitError):
    """A target color sequence is not in canonical consecutive form."""


class InvalidBatch(PdakitError):
    """A parameter update was requested on an empty batch."""


class DivergenceError(PdakitError):
    """Training produced non-finite parameters.

    Carries the last finite parameter set as ``checkpoint``.
    """

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class DimensionError(PdakitError):
    """Simulation inputs disagree on packet or user counts."""


class DecodeError(PdakitError):
    """A user could not cancel a broadcast; the underlying array is broken."""


class ParseError(PdakitError):
    """A file does not conform to its declared format.

    ``line`` and ``token`` locate the first offending token (1-based line,
    0-based token index within the line) when known.
    """

    def __init__(self, message, line=None, token=None):
        super().__init__(message)
        self.line = line
        self.token = token
