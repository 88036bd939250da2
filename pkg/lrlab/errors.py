"""
lrlab Errors
Exception hierarchy shared by every module
"""


class LrlabError(Exception):
    """Base class for all lrlab errors"""


class DomainError(LrlabError, ValueError):
    """A precondition on the inputs does not hold"""


class ResourceError(LrlabError, RuntimeError):
    """A work budget or dimension cap was exceeded, or an iterative method did not converge"""


class UnsupportedError(LrlabError):
    """The operation is not available for this representation"""


class ConfigError(LrlabError):
    """An experiment configuration failed validation"""
