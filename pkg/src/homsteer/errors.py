"""Exception types shared across the package."""


class HomsteerError(ValueError):
    """Base class for all errors raised by this package."""


class InvalidOrderError(HomsteerError):
    """Group constructor called with an unsupported order."""


class InvalidSubgroupError(HomsteerError):
    """Element set is not closed under multiplication or inversion."""


class InvalidSectionError(HomsteerError):
    """A section hint does not form a transversal of the cosets."""


class NotInducedError(HomsteerError):
    """A feature map violates the Mackey condition beyond tolerance."""


class DimensionMismatchError(HomsteerError):
    """Array shapes are incompatible with the declared representations."""


class NotGInvariantError(HomsteerError):
    """A two-argument kernel is not constant on diagonal G-orbits."""


class ConstraintViolationError(HomsteerError):
    """A kernel or integrand fails its steerability constraint."""


class NotEquivariantError(HomsteerError):
    """An operator fails the equivariance check; carries a witness."""


class UnsupportedGroupError(HomsteerError):
    """Operation only defined for a specific group family."""


class UnsupportedRepsError(HomsteerError):
    """Operation requires trivial (or otherwise restricted) representations."""


class DegenerateNormalizationError(HomsteerError):
    """Attention-style normalisation sum evaluated to zero."""


class ConfigError(HomsteerError):
    """Harness configuration failed validation."""
