"""Exception types shared across the package."""


class MixLensError(Exception):
    """Base class for all mixlens errors."""


class DataFormatError(MixLensError):
    """Input file does not match the expected dataset/vocabulary shape."""


class TrainingError(MixLensError):
    """Reference training preconditions violated (e.g. single-class data)."""


class DivergenceError(TrainingError):
    """Training produced a non-finite loss.

    Carries the name of the hyperparameter most likely at fault.
    """

    def __init__(self, message: str, hyperparameter: str):
        super().__init__(message)
        self.hyperparameter = hyperparameter


class PredictionError(MixLensError):
    """A prediction batch failed; `batch_indices` are the failed positions."""

    def __init__(self, message: str, batch_indices: list[int] | None = None):
        super().__init__(message)
        self.batch_indices = batch_indices or []


class ProtocolError(MixLensError):
    """External classifier sent a malformed or invalid response."""


class AdapterConnectionError(MixLensError):
    """External classifier process could not be started or handshaken."""


class OracleError(MixLensError):
    """Requested oracle does not exist for this model shape."""


class SizeLimitError(MixLensError):
    """Instance too large for exhaustive enumeration."""


class ExplanationError(MixLensError):
    """Instance cannot be explained (e.g. no maskable token types)."""


class EvalInputError(MixLensError):
    """Explanations, dataset, or model handed to eval are inconsistent."""


class OutputExistsError(MixLensError):
    """Refusing to overwrite an existing output file."""
