"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the documented domain of an operation."""


class UnsupportedCombinationError(ValueError):
    """A distribution combination is not defined for the given inputs."""


class RecursionDivergedError(RuntimeError):
    """The threshold recursion produced a non-finite or non-increasing value."""


class ScheduleInfeasibleError(RuntimeError):
    """No summable thinning schedule exists for the requested inputs."""


class ZeroTimeExplosionError(RuntimeError):
    """The spec places supercritical mass at delay zero; simulation is refused."""


class ConfigError(ValueError):
    """A run configuration document failed validation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
