"""Exception types shared across the package."""


class EditModelError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(EditModelError):
    """A model, scheme, or option set is structurally invalid."""


class InputError(EditModelError):
    """Input data is malformed: unknown tokens, bad files, bad arguments."""


class TrainingError(EditModelError):
    """Training cannot proceed: empty or fully degenerate statistics."""
