"""Exception hierarchy shared by all agewatch modules."""


class AgewatchError(Exception):
    """Base class for every error raised by the toolkit."""


class RowError(AgewatchError):
    """An input problem attributable to one data row (1-based, header excluded)."""

    def __init__(self, message, row):
        super().__init__(f"{message} (row {row})")
        self.row = row


class MissingColumn(RowError):
    pass


class NonMonotonicTimestamps(RowError):
    pass


class NonFiniteValue(RowError):
    pass


class IrregularSampling(RowError):
    pass


class EmptyFile(RowError):
    pass


class WarmupConsumesEverything(AgewatchError):
    pass


class SeriesTooShort(AgewatchError):
    pass


class InvalidPeriod(AgewatchError):
    pass


class InvalidSpan(AgewatchError):
    pass


class WindowTooShort(AgewatchError):
    pass


class SeriesShorterThanWindow(AgewatchError):
    pass


class EmptyTrainingSet(AgewatchError):
    pass


class FeatureWidthMismatch(AgewatchError):
    pass


class TooFewRows(AgewatchError):
    pass


class ModelFormatError(AgewatchError):
    pass


class ValueOutOfRange(AgewatchError):
    pass


class InvalidSpec(AgewatchError):
    pass


class IndexOutOfRange(AgewatchError):
    pass


class SourceExhausted(AgewatchError):
    pass


class LengthMismatch(AgewatchError):
    pass
