"""Exception hierarchy.

ValidationError subclasses mean the caller handed us something malformed
(bad shapes, bad files, bad config); NumericalError subclasses mean the
inputs were well-formed but the math could not be carried out.  The CLI
maps the former to exit code 2 and the latter to exit code 3.
"""


class CorpError(Exception):
    pass


class ValidationError(CorpError):
    pass


class NumericalError(CorpError):
    pass


# linear algebra

class NonSquare(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NonPositiveLambda(ValidationError):
    pass


class NoConvergence(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


# tensor container / config files

class BadMagic(ValidationError):
    pass


class CorruptHeader(ValidationError):
    pass


class TruncatedPayload(ValidationError):
    pass


class UnknownDtype(ValidationError):
    pass


class DuplicateName(ValidationError):
    pass


class IoError(CorpError):
    pass


# model / statistics

class ShapeMismatch(ValidationError):
    pass


class WidthMismatch(ValidationError):
    pass


class EmptyAccumulator(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


class MissingStats(ValidationError):
    pass


class MissingLabels(ValidationError):
    pass


class UnknownPreset(ValidationError):
    pass


class ZeroTrace(ValidationError):
    pass
