"""Exception hierarchy shared by the library and the CLI."""


class DSAError(Exception):
    """Base class for all errors raised by dsa_counts."""

    category = "error"


class DomainError(DSAError, ValueError):
    """An argument lies outside the domain of an operation."""

    category = "domain"


class IntegrationError(DSAError, ArithmeticError):
    """The ODE integrator produced a non-finite state."""

    category = "integration"

    def __init__(self, message, time):
        super().__init__(f"{message} (at t={time:.6g})")
        self.time = time


class DegenerateError(DSAError, ValueError):
    """A conditional quantity is undefined, e.g. no epidemic mass by T."""

    category = "degenerate"


class UnsupportedError(DSAError):
    """The requested configuration is not supported."""

    category = "unsupported"


class ConfigError(DSAError):
    category = "config"


class ParseError(DSAError, ValueError):
    category = "parse"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SamplerError(DSAError, RuntimeError):
    """The MCMC sampler could not start or stopped moving."""

    category = "sampler"
