"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent parameters."""


class UnsupportedConfiguration(ValueError):
    """Parameters are valid but the requested quantity is not defined for them."""


class CostGuardError(RuntimeError):
    """Requested computation exceeds a configured cost guard."""


class OracleFailure(RuntimeError):
    """A verification engine could not certify its own accuracy."""
