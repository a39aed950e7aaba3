class SmcError(Exception):
    """
    Base class for every error raised by highdim_smc.
    """


class ImproperlyConfigured(SmcError):
    """
    An experiment, backend or kernel was configured with unknown or inconsistent settings.
    """


class ArgumentError(SmcError, ValueError):
    """
    An operation was called outside of its documented pre-conditions.
    """


class EvaluationError(SmcError, ValueError):
    """
    A potential was evaluated outside of its declared support.
    """


class DegeneracyError(SmcError, RuntimeError):
    """
    All particle weights vanished, so the weighted ensemble carries no information.
    """


class PropagationError(SmcError, RuntimeError):
    """
    A particle reached a non-finite state or potential value.

    Attributes:
        particle_index (int | None): Index of the first offending particle, when known.
    """

    def __init__(self, message, particle_index=None):
        self.particle_index = particle_index
        if particle_index is not None:
            message = f"{message} (particle {particle_index})"
        super().__init__(message)


class EstimationError(SmcError):
    """
    A replicate statistic could not be estimated from the available replicates.
    """


class NumericalError(SmcError, ArithmeticError):
    """
    A quadrature or other numerical routine failed or returned a non-finite value.
    """
