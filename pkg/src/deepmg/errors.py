"""Exception types raised by deepmg."""


class DeepMGError(Exception):
    """Base class for all library errors."""


class ConfigurationError(DeepMGError, ValueError):
    """Invalid grid size, problem parameters or experiment settings."""


class PreconditionError(ConfigurationError):
    """A documented precondition on the inputs does not hold."""


class NumericalError(DeepMGError, ArithmeticError):
    """Base class for failures of the numerical machinery."""


class SingularSmootherError(NumericalError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"zero diagonal entry of A at row {index}; damped Jacobi is undefined")


class CoarseSingularityError(NumericalError):
    def __init__(self, pivot, tol):
        self.pivot = pivot
        self.tol = tol
        super().__init__(f"coarse matrix RAP is singular: pivot magnitude {pivot:.3e} below {tol:.3e}")


class EigenvalueConvergenceError(NumericalError):
    def __init__(self, block, sweeps):
        self.block = block
        self.sweeps = sweeps
        super().__init__(
            f"QR iteration did not converge after {sweeps} sweeps; "
            f"unreduced block of size {block.shape[0]}"
        )


class NonFiniteGradientError(NumericalError):
    pass
