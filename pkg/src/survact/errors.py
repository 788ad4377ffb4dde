"""Exception types shared across the package."""


class SurvactError(Exception):
    """Base class for all package errors."""


class NoEventsError(SurvactError):
    """The dataset contains no observed events, so nothing can be fitted."""


class DimensionError(SurvactError):
    """Covariate / coefficient dimensions do not line up."""


class SeparationError(SurvactError):
    """Monotone-likelihood divergence: coefficients ran away during fitting."""


class NoComparablePairsError(SurvactError):
    """Concordance is undefined: no (event, later-time) pair exists."""


class EmptyPoolError(SurvactError):
    """A query was requested from an empty candidate pool."""


class MissingFeatureError(SurvactError):
    """An oracle query lacks a feature the oracle needs."""


class CalibrationError(SurvactError):
    """Censoring-rate calibration could not reach the requested target."""


class SplitError(SurvactError):
    """No usable train/pool/validation split was found within the retry budget."""


class DegenerateDataError(SurvactError):
    """Data admits no survival structure (e.g. all observed times equal)."""


class TrainingDivergedError(SurvactError):
    """Autoencoder training produced NaN/Inf."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class ValidationError(SurvactError):
    """Input data violates a documented contract (e.g. non-binary treatment column)."""


class AllRunsFailedError(SurvactError):
    """Every run of a multi-run procedure failed."""


class InvariantViolationError(SurvactError):
    """An internal invariant was violated (e.g. label earlier than censoring)."""


class OracleError(SurvactError):
    """An oracle could not answer a query."""


class OracleTimeoutError(OracleError):
    """A human oracle did not answer within the configured timeout."""
