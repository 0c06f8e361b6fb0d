"""Exception types shared across the package."""


class HarmonaggError(Exception):
    """Base class for all package errors."""


class UnknownChord(HarmonaggError, ValueError):
    pass


class CorpusFormatError(HarmonaggError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCorpus(HarmonaggError, ValueError):
    pass


class DegenerateRow(HarmonaggError, ValueError):
    pass


class ZeroProbabilityTransition(HarmonaggError, ValueError):
    pass


class VersionMismatch(HarmonaggError, ValueError):
    pass


class ChecksumError(HarmonaggError, ValueError):
    pass


class LengthMismatch(HarmonaggError, ValueError):
    pass


class InvalidPartition(HarmonaggError, ValueError):
    pass


class UnassignedAgent(HarmonaggError, ValueError):
    pass


class BudgetExceeded(HarmonaggError, RuntimeError):
    pass


class ProfileFormatError(HarmonaggError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SequenceTooShort(HarmonaggError, ValueError):
    pass
