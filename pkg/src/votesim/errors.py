"""Exception taxonomy shared across the package."""


class InvalidParameter(ValueError):
    """An operation was called with arguments outside its contract."""


class InvalidBallot(ValueError):
    """A ballot choice is outside the configured candidate range."""


class ConfigurationError(ValueError):
    """A session, experiment, or adversary configuration is inconsistent."""


class ProtocolAbort(RuntimeError):
    """A communication round could not complete (missing or duplicate
    submissions, bad commitment openings, malformed contributions).

    Protocol runners convert this into a failed run outcome rather than
    letting it escape to the caller.
    """

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = tuple(offenders)


class NeedsMoreRandomness(Exception):
    """A deterministic draw ran out of entropy and the caller should
    supply a larger batch."""
