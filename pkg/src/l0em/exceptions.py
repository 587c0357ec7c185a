"""Exception types shared across the package."""


class NumericError(RuntimeError):
    """Raised when a linear solve or iteration produces unusable numbers.

    Argument problems (bad shapes, negative weights, invalid options) raise
    ValueError instead; NumericError is reserved for failures that depend on
    the data, such as an ill-conditioned kernel or a non-finite iterate.
    """


class NotFittedError(ValueError, AttributeError):
    """Raised when an estimator is used before ``fit``."""
