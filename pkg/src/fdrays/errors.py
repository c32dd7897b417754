"""Exception hierarchy shared by the library and the CLI."""


class FDRaysError(Exception):
    """Base class for all library errors."""


class InvalidArgument(FDRaysError, ValueError):
    pass


class InvalidMesh(FDRaysError, ValueError):
    pass


class InvalidOperator(FDRaysError, ValueError):
    pass


class NumericalError(FDRaysError, ArithmeticError):
    """Failures of a numerical procedure (CLI exit code 3)."""


class InstabilityError(NumericalError):
    def __init__(self, step, growth):
        self.step = step
        self.growth = growth
        super().__init__(f"leapfrog blow-up at step {step}: |u| grew by {growth:.3e}")


class UndefinedCentroid(NumericalError):
    pass


class OutOfValidity(NumericalError):
    pass


class RayStepError(NumericalError):
    pass


class NotTrapped(NumericalError):
    pass


class DegenerateRay(NumericalError):
    pass
