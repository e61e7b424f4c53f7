"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A physical or protocol parameter is outside its valid domain."""


class DegenerateChannelError(ParameterError):
    """The channel produces no detection events (y1 = 0 or eta = 0)."""


class ConfigError(ValueError):
    """A config file or override could not be parsed or validated."""


class MalformedStreamError(ValueError):
    """A compressed bit stream does not parse as a codeword sequence."""


class SimulationIntegrityError(RuntimeError):
    """Internal cross-check failed during a simulation (decode mismatch)."""
