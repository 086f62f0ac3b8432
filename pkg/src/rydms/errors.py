"""Exception types raised by the simulator."""


class DomainError(ValueError):
    """A physical parameter is outside the domain of a formula."""


class DegeneracyError(RuntimeError):
    """Branch tracking met an exact degeneracy it cannot resolve."""


class IntegratorError(RuntimeError):
    """Time propagation lost unitarity beyond tolerance."""


class LeakageError(RuntimeError):
    """Population left the qubit subspace; no unitary can be extracted."""


class ConvergenceError(RuntimeError):
    """An iterative solver or fit did not converge."""


class ConfusionError(ValueError):
    """Measurement-confusion inversion is singular or inconsistent."""
