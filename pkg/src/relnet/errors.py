"""Exception hierarchy shared across relnet modules."""


class RelnetError(Exception):
    """Base class for all relnet errors."""


class InvalidKeyword(RelnetError, ValueError):
    pass


class SchemaError(RelnetError, ValueError):
    """An input file or record does not match the expected layout."""


class CatalogError(RelnetError, KeyError):
    pass


class ResumeError(RelnetError):
    """A checkpoint does not belong to the plan being resumed."""


class BackendError(RelnetError):
    """A search backend could not produce a hit count."""


class UndefinedMetric(RelnetError, ArithmeticError):
    """A metric's denominator is zero for the requested entry."""


class SelectionError(RelnetError, ValueError):
    pass


class StatError(RelnetError, ValueError):
    pass


class ConfigError(RelnetError, ValueError):
    pass


class DataWarning(UserWarning):
    """Recoverable data-quality issue (missing pairs, duplicates, failed queries)."""
