"""Exception hierarchy shared across the toolkit.

ConfigError maps to CLI exit code 2, DataError to 3; anything else escaping
the library is treated as an internal invariant violation (exit 4).
"""


class FairsampleError(Exception):
    pass


class ConfigError(FairsampleError):
    """Invalid configuration, schema, or parameter combination."""


class DataError(FairsampleError):
    """Input data violates a documented precondition (bad CSV, empty group,
    exhausted sampling pool, undersized stratum, ...)."""
