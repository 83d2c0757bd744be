"""Exception hierarchy shared by the library and the CLI."""


class PcimError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 3


class ConfigError(PcimError, ValueError):
    """Run parameters are invalid."""

    exit_code = 2


class DataError(PcimError):
    """Input data is missing, empty or ill-formed."""


class UndefinedMetricError(DataError):
    """A metric is undefined for the given input."""


class DimensionError(PcimError, ValueError):
    """Shapes do not agree."""


class FormatError(PcimError):
    """A file on disk is corrupt or truncated."""


class StateError(PcimError):
    """An object is in the wrong state for the requested operation."""


class ConstraintError(PcimError, ValueError):
    """A value violates a declared constraint."""


class ArchitectureError(PcimError):
    """The network lacks a layer the method needs."""


class NumericError(PcimError):
    """Non-finite values appeared during computation."""

    exit_code = 4
