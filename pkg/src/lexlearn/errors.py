"""Exception types shared across the toolkit.

The CLI maps every ``LexlearnError`` to exit code 1 (data / numerical
failure); genuine usage mistakes surface as exit code 2 via argparse or
explicit usage checks.
"""


class LexlearnError(Exception):
    """Base class for all data and numerical errors raised by lexlearn."""


class SchemaError(LexlearnError):
    """A required column is missing from a delimited input file."""


class RowError(LexlearnError):
    """A cell could not be parsed; the message carries the file line number."""


class EmptyCorpusError(LexlearnError):
    """No usable rows remain after loading and filtering."""


class FormatError(LexlearnError):
    """A file does not follow its declared format (e.g. a word-vector file)."""


class DimensionError(LexlearnError):
    """Mismatched shapes, lengths, or counts."""


class NumericalError(LexlearnError):
    """A numerical routine failed (singular system, non-convergence)."""


class DegenerateLabelsError(LexlearnError):
    """All document labels are identical where variation is required."""


class TrainingError(LexlearnError):
    """Network training could not start or diverged."""


class UndefinedCorrelationError(LexlearnError):
    """Pearson correlation is undefined (zero variance in an argument)."""


class DataError(LexlearnError):
    """Generic data-level failure not covered by a more specific class."""
