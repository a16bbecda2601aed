"""Exception types shared across the package."""


class DispersimError(Exception):
    """Base class for package-specific failures."""


class ConfigError(DispersimError):
    """Invalid or inconsistent experiment configuration (CLI exit code 2)."""


class NumericalInstabilityError(DispersimError):
    """Field blow-up detected during time stepping (CLI exit code 3)."""


class SteadyStateError(DispersimError):
    """A continuous-wave run failed to reach a periodic steady state."""
