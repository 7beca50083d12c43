"""Exception types shared across the pipeline.

Every error carries a short machine-readable ``code`` so the CLI can emit a
single parsable line on failure.
"""


class FpError(Exception):
    code = "FP_ERROR"


class OutOfBounds(FpError):
    code = "OUT_OF_BOUNDS"


class EmptyRoi(FpError):
    code = "EMPTY_ROI"


class TruncatedRidge(FpError):
    code = "TRUNCATED_RIDGE"


class TooFewMinutiae(FpError):
    code = "TOO_FEW_MINUTIAE"


class NotEnrollable(FpError):
    code = "NOT_ENROLLABLE"

    def __init__(self, count, minimum=10):
        super().__init__(f"template has {count} good-quality minutiae, need >= {minimum}")
        self.count = count
        self.minimum = minimum


class EmptyTemplate(FpError):
    code = "EMPTY_TEMPLATE"


class SpecTooLarge(FpError):
    code = "SPEC_TOO_LARGE"


class CorruptTemplate(FpError):
    code = "CORRUPT_TEMPLATE"


class EmptyScoreList(FpError):
    code = "EMPTY_SCORE_LIST"


class SpecInfeasible(FpError):
    code = "SPEC_INFEASIBLE"


class ConfigError(FpError):
    code = "CONFIG_ERROR"


class ZeroVarianceImage(UserWarning):
    """Warning raised by :func:`fpmatch.preprocess.normalize` on flat input."""
