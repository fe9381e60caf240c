"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DesignError -> 2,
NumericalError -> 3. Plain ValueError is reserved for programming errors
(dimension mismatches, invalid arguments) at the library surface.
"""


class ConfigError(ValueError):
    """Scenario file or schema problem."""


class DesignError(RuntimeError):
    """A design assumption does not hold (connectivity, stabilizability,
    positive definiteness, adaptive feasibility)."""


class NumericalError(RuntimeError):
    """An iteration failed to converge, a linear system was singular, or an
    integration produced non-finite values."""
