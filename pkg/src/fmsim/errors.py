"""Exception types shared across the package."""


class FmsimError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FmsimError):
    """Invalid scenario, driver, or series configuration.

    ``errors`` collects every individual validation failure so callers can
    report them together instead of one at a time.
    """

    def __init__(self, message: str, errors: list[str] | None = None):
        super().__init__(message)
        self.errors = errors or [message]

    def __str__(self) -> str:
        if self.errors and self.errors != [self.args[0]]:
            return "{}:\n  - {}".format(self.args[0], "\n  - ".join(self.errors))
        return self.args[0]


class EpisodeInvalidError(FmsimError):
    """Vehicle state left the valid envelope during an episode."""


class IncompleteTraceError(FmsimError):
    """Trace has no episode-end marker and cannot be evaluated."""


class MalformedLogError(FmsimError):
    """Session log violates the scripted-driver invariants."""


class OrderingError(FmsimError):
    """Driver queried with non-increasing time."""


class MismatchedInputsError(FmsimError):
    """Record and trace disagree about event times."""


class EmptyInputError(FmsimError):
    """Metric requested over an empty collection."""


class LengthMismatchError(FmsimError):
    """Parallel input lists have different lengths."""


class EmptyContingencyError(FmsimError):
    """Contingency table is all zeros; accuracy is undefined."""
