"""Exception types shared across the package."""


class ImpactLabError(Exception):
    """Base class for all impactlab errors."""


class NoImpactError(ImpactLabError):
    """The contact point is not approaching the surface, so no impact occurs."""


class DegenerateContactError(ImpactLabError):
    """The incident contact-point velocity is zero; the admissible set is undefined."""


class ConfigError(ImpactLabError):
    """A generation or run configuration is invalid or unusable."""


class DatasetFormatError(ImpactLabError):
    """A dataset file does not match the expected schema."""


class SplitLeakageError(ImpactLabError):
    """A learned model was trained on trials that appear in the evaluation split."""


class GpFitError(ImpactLabError):
    """Gaussian-process training failed (e.g. kernel not positive definite)."""
