"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific type that applies rather than bare ValueError.
"""


class HhgError(Exception):
    """Base class for all package errors."""


class ConfigError(HhgError, ValueError):
    """Invalid configuration or parameter domain (CLI exit code 2)."""


class NumericsError(HhgError, RuntimeError):
    """Backend numerical failure: NaN/Inf, non-convergence, unusable grids
    (CLI exit code 3)."""


class CacheIntegrityError(HhgError, RuntimeError):
    """Cache file corrupt or inconsistent with its sidecar (CLI exit code 4)."""
