"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain where a formula is defined."""


class ConfigError(ValueError):
    """A configuration is inconsistent or names an unsupported combination."""


class IntegrationError(RuntimeError):
    """The ODE state became non-finite or left its physical domain.

    ``tau`` holds the model time (years) of the offending step.
    """

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class TrainingError(RuntimeError):
    """Training diverged; ``epoch`` is the first epoch with a non-finite loss."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class StageError(RuntimeError):
    """An experiment stage failed; carries the stage name and partial manifest."""

    def __init__(self, stage, cause, manifest=None):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.manifest = manifest or {}


class AttributionError(RuntimeError):
    """Attribution failed on one sample; ``index`` is its row in the dataset."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
