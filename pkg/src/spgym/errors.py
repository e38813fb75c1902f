class DomainError(ValueError):
    """Input violates an operation's contract (bad tile id, malformed state, ...)."""


class ConfigurationError(RuntimeError):
    """Run setup is unusable (missing dataset, pool too small, overlapping splits, ...)."""
