"""Exception types raised across the toolkit."""


class VBRelaxError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(VBRelaxError, ValueError):
    """An argument violates a documented precondition.

    ``key`` names the offending parameter when one can be identified; the
    command-line front end reports it verbatim.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class OutOfRangeError(InvalidInputError):
    """A lookup was requested outside the tabulated domain."""


class UndefinedRateError(VBRelaxError, ZeroDivisionError):
    """A relaxation time was requested for a vanishing total rate."""
