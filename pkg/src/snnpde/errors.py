"""Exception hierarchy shared by all modules."""


class SnnPdeError(Exception):
    """Base class for every error raised by this package."""


class InvalidDerivativeOrder(SnnPdeError, ValueError):
    pass


class ZeroWeight(SnnPdeError, ValueError):
    pass


class UnsupportedPower(SnnPdeError, ValueError):
    pass


class ZeroFrequency(SnnPdeError, ValueError):
    pass


class WidthTooSmall(SnnPdeError, ValueError):
    pass


class InsufficientRegularity(SnnPdeError, ValueError):
    pass


class NonEllipticCoefficient(SnnPdeError, ValueError):
    pass


class SingularSystem(SnnPdeError, ArithmeticError):
    pass


class IndefiniteSystem(SnnPdeError, ArithmeticError):
    pass


class DivergenceDetected(SnnPdeError, ArithmeticError):
    """Raised by iterative solvers when the iterate norm blows up."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class NotSymmetric(SnnPdeError, ValueError):
    pass


class WindowBelowFloor(SnnPdeError, ValueError):
    pass


class FloorContamination(SnnPdeError, ArithmeticError):
    """The smallest eigenvalue sits under the double-precision noise floor.

    ``widths`` lists the offending matrix sizes so callers can report them.
    """

    def __init__(self, message, widths=()):
        super().__init__(message)
        self.widths = tuple(widths)


class ZeroReference(SnnPdeError, ValueError):
    pass


class EmptyReferenceMode(SnnPdeError, ValueError):
    pass


class NonFiniteLoss(SnnPdeError, ArithmeticError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ConfigValidation(SnnPdeError, ValueError):
    """Config failed schema validation; ``errors`` maps field -> message."""

    def __init__(self, errors):
        self.errors = dict(errors)
        lines = "; ".join(f"{k}: {v}" for k, v in self.errors.items())
        super().__init__(f"invalid config: {lines}")


class SchemaMismatch(SnnPdeError, ValueError):
    pass
