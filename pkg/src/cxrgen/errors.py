"""Domain exceptions. The CLI maps any CxrError to exit status 1."""


class CxrError(Exception):
    """Base class for all domain errors; .code is the machine-readable name."""

    @property
    def code(self) -> str:
        return type(self).__name__


# imaging
class MalformedImage(CxrError):
    pass


class UnsupportedFormat(CxrError):
    pass


class WrongDimensions(CxrError):
    pass


# neuralnet / optimizer
class ShapeMismatch(CxrError):
    pass


class StaleCache(CxrError):
    pass


# classifier / evaluation
class EmptyDataset(CxrError):
    pass


class LengthMismatch(CxrError):
    pass


class OutOfRange(CxrError):
    pass


# dataset
class BadHeader(CxrError):
    pass


class BadLabel(CxrError):
    pass


class DuplicateId(CxrError):
    pass


class EmptyFile(CxrError):
    pass


class InsufficientPositives(CxrError):
    pass


class InsufficientNegatives(CxrError):
    pass


# reportgen master text
class MissingSentence(CxrError):
    pass


class UnknownAbnormality(CxrError):
    pass


class EmptySentence(CxrError):
    pass


# bundle persistence
class BadMagic(CxrError):
    pass


class TruncatedFile(CxrError):
    pass


class VersionMismatch(CxrError):
    pass


class IncompleteBundle(CxrError):
    pass
