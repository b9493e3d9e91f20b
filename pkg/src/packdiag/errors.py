"""Shared exception types, mapped to CLI exit codes by the command layer."""


class ConfigError(ValueError):
    """Invalid configuration: bad value, unknown key, unstable time step."""


class SimulationError(RuntimeError):
    """Numerical failure inside the simulator (non-finite field, singular network)."""


class DataFormatError(ValueError):
    """Malformed dataset, params, or trace file."""
