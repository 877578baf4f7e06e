"""
Exception types shared across the package.

Invalid arguments raise plain :class:`ValueError`; the two subclasses below
let callers (and the command line) tell bad data and broken internal
contracts apart from simple misuse.
"""


class DataError(ValueError):
    """The input series cannot be used: non-finite or non-numeric values,
    ties under strict mode, or too few observations for the requested
    embedding."""


class ContractViolation(RuntimeError):
    """An internal contract was broken, e.g. component statistics that were
    resampled with different multiplier sequences are being combined."""
