"""Exception types shared across the toolkit."""


class QleError(Exception):
    """Base class for all toolkit errors."""


class InvalidStateError(QleError, ValueError):
    """Density matrix fails the Hermiticity / trace / positivity checks."""


class DomainError(QleError, ValueError):
    """Argument outside the physically meaningful domain."""


class ConfigError(QleError, ValueError):
    """Experiment configuration is malformed or inconsistent."""


class FitError(QleError, RuntimeError):
    """Nonlinear fit did not converge.

    The best parameter estimate seen so far is attached as ``result`` so
    callers can inspect where the fit got stuck.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
