"""Exception hierarchy shared by every module."""


class QuatSMCError(Exception):
    pass


class DimensionError(QuatSMCError, ValueError):
    pass


class PreconditionError(QuatSMCError, ValueError):
    pass


class DomainError(QuatSMCError, ValueError):
    pass


class SingularityError(QuatSMCError, ValueError):
    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class InfeasibleError(QuatSMCError):
    def __init__(self, message, limiting=None):
        super().__init__(message)
        self.limiting = limiting


class ConfigError(QuatSMCError, ValueError):
    pass


class AbortError(QuatSMCError):
    """An abort condition raised by the initialization loop."""

    def __init__(self, message, step=None, audit=None):
        super().__init__(message)
        self.step = step
        self.audit = list(audit or [])


class DivergenceError(QuatSMCError):
    pass
