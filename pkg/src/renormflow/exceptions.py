"""Shared exception types."""


class ConvergenceError(RuntimeError):
    """Iteration or series failed to converge within its budget."""


class ParameterError(ValueError):
    """Inputs outside the domain an algorithm is valid for."""


class FieldFormatError(ValueError):
    """Persisted field file has a malformed or unsupported header."""


class ChecksumError(ValueError):
    """Persisted file content does not match its recorded checksum."""
