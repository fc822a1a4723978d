"""Exception hierarchy.

Two branches matter to callers: :class:`DataValidationError` covers anything
wrong with the inputs themselves (bad files, impossible outcomes), and
:class:`NumericDegeneracyError` covers inputs that are formally valid but make
a statistic undefined (no comparable pairs, degenerate outcome at the chosen
horizon). The CLI maps these to exit codes 3 and 4 respectively.
"""


class EEScreenError(Exception):
    """Base class for all library errors."""


class DataValidationError(EEScreenError):
    """Input data violates a documented contract."""


class MalformedFileError(DataValidationError):
    """File cannot be parsed (row length mismatch, non-numeric cell, bad magic)."""


class DimensionOverflowError(DataValidationError):
    """Matrix would exceed the configured cell-count cap."""


class ConstantColumnError(DataValidationError):
    """A covariate column has (near-)zero sample variance and cannot be scaled."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"constant column(s) at indices {self.columns}")


class NegativeTimeError(DataValidationError):
    """An observed time is negative."""


class NonPositiveTimeError(DataValidationError):
    """A log-scale residual needs strictly positive times."""


class NonBinaryEventError(DataValidationError):
    """An event indicator is neither 0 nor 1."""


class AllCensoredError(DataValidationError):
    """Every observation is censored; event-based statistics are undefined."""


class UnsupportedModelError(EEScreenError):
    """The requested operation is not defined for this model kind."""


class NumericDegeneracyError(EEScreenError):
    """Inputs are valid but the requested statistic is undefined on them."""


class DegenerateOutcomeError(NumericDegeneracyError):
    """All units fall on the same side of the horizon; statistics are all zero."""


class NoComparablePairsError(NumericDegeneracyError):
    """No usable case/control or concordance pair exists."""


class EmptyGridError(NumericDegeneracyError):
    """Tuning grid is empty (path saturated immediately)."""


class NonBracketingError(NumericDegeneracyError):
    """Censoring-rate calibration could not bracket the target fraction."""


class ReplicationError(EEScreenError):
    """A Monte-Carlo replication failed; carries the replication index."""

    def __init__(self, rep, cause):
        self.rep = rep
        self.cause = cause
        super().__init__(f"replication {rep} failed: {cause}")
