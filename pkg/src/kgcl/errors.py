"""Exception types shared across the package."""


class KgclError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(KgclError):
    """Caller-supplied value violates a precondition (bad name, bad verdict, ...)."""


class IntegrityError(KgclError):
    """Referential integrity breach: unregistered id, out-of-range row, shape mismatch."""


class TripleParseError(ValidationError):
    """A triple text file contains malformed lines.

    ``lines`` holds the 1-based line numbers of every offending line.
    """

    def __init__(self, path: str, lines: list[int]):
        self.path = path
        self.lines = lines
        listed = ", ".join(str(n) for n in lines)
        super().__init__(f"{path}: malformed triple line(s) {listed} (expected 3 tab-separated fields)")


class FormatError(KgclError):
    """Persisted file has a wrong magic string, unsupported version, or is truncated."""


class ConfigError(KgclError):
    """Invalid configuration value (odd dimension, negative count, ...)."""


class SamplingError(KgclError):
    """Sampling is impossible (fewer than two entities, empty pool, ...)."""


class ProtocolError(KgclError):
    """An operation arrived in a state that forbids it (verdict on a closed question,
    training-finished while exploring, ...)."""
