"""Exception types shared across modules."""


class HypothesisError(ValueError):
    """A parameter set violates a standing hypothesis.

    ``condition`` carries the label of the violated condition, e.g. ``"(Q0)"``.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class GeometryError(ValueError):
    pass


class SingularMultiplierError(HypothesisError):
    def __init__(self, message, points):
        super().__init__(message, condition="(Q0)")
        self.points = points


class ConvergenceError(RuntimeError):
    pass


class UniquenessFailure(RuntimeError):
    """A discrete kernel of the weak operator was found."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
