"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`RockEEGError`.
Errors that describe bad caller input also derive from :class:`ValueError` so
that generic ``except ValueError`` handlers (and scikit-learn's own checks)
keep working.
"""


class RockEEGError(Exception):
    """Base class for all package errors."""


# dataset / splitting
class EmptyInput(RockEEGError, ValueError):
    pass


class LengthMismatch(RockEEGError, ValueError):
    pass


class LabelOutOfRange(RockEEGError, ValueError):
    pass


class InsufficientTrials(RockEEGError, ValueError):
    pass


class ContainerError(RockEEGError, ValueError):
    """Malformed or unexpected serialized container."""


# EDF parsing
class MalformedHeader(RockEEGError, ValueError):
    pass


class TruncatedRecord(RockEEGError, ValueError):
    pass


class NonNumericField(MalformedHeader):
    pass


class UnsupportedVariant(RockEEGError, ValueError):
    pass


# preprocessing / epoching
class SingleChannel(RockEEGError, ValueError):
    pass


class BandOutOfRange(RockEEGError, ValueError):
    pass


class SignalTooShort(RockEEGError, ValueError):
    pass


class UpsamplingUnsupported(RockEEGError, ValueError):
    pass


class UnmappedAnnotation(RockEEGError, ValueError):
    pass


class WindowPastEnd(RockEEGError, ValueError):
    pass


class MissingChannel(RockEEGError, KeyError):
    pass


# minirocket
class SeriesTooShort(RockEEGError, ValueError):
    pass


class KernelDoesNotFit(RockEEGError, ValueError):
    pass


class EmptyOutput(RockEEGError, ValueError):
    pass


class EmptyTrainingSet(RockEEGError, ValueError):
    pass


# linear classifier
class TooFewRows(RockEEGError, ValueError):
    pass


class SingularSystem(RockEEGError, ArithmeticError):
    pass


class LabelMismatch(RockEEGError, ValueError):
    pass


class WidthMismatch(RockEEGError, ValueError):
    pass


# neural network
class ShapeMismatch(RockEEGError, ValueError):
    pass


class ShapeChainInvalid(RockEEGError, ValueError):
    pass


class NonFiniteLoss(RockEEGError, FloatingPointError):
    def __init__(self, message, batch_index=None):
        super().__init__(message)
        self.batch_index = batch_index


# evaluation
class EmptyMatrix(RockEEGError, ValueError):
    pass


class SingleClassPresent(RockEEGError, ValueError):
    pass
