"""Exception types raised by the computational kernels."""


class ModelError(ValueError):
    """Base class for invalid inputs to a model computation."""


class InvalidSpecError(ModelError):
    """Parameters violate a domain or parity invariant."""


class CapExceededError(ModelError):
    """Exhaustive enumeration requested above the configured step cap."""


class BudgetExceededError(ModelError):
    """A dynamic program would exceed its configured size budget."""


class EmptyPathSetError(ModelError):
    """The requested path set is empty, so no entropy or free energy exists."""


class DisorderTooShortError(ModelError):
    """The monomer word is shorter than the number of steps."""


class WindowError(ModelError):
    """A column-disorder window does not cover the rows a computation needs."""


class InfeasibleError(ModelError):
    """A step budget is below the minimal crossing time of a variational problem."""


class OutOfFieldError(ModelError):
    """A trajectory leaves the sampled block field."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not converge within its iteration limit."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
