"""Exception types raised across the toolkit."""


class ShapeValidationError(ValueError):
    """Malformed pointwise data: wrong dimensions, asymmetric h, bad JSON."""


class FrameError(ValueError):
    """A frame matrix or vector set is not orthonormal within tolerance."""


class InconsistentKindError(ValueError):
    """Bound kind, ambient form and shape type do not fit together."""


class DegenerateQP(ValueError):
    """The KKT system of a trace-constrained QP is singular.

    Attributes
    ----------
    nullspace_dim : int
        Dimension of the KKT matrix kernel.
    """

    def __init__(self, message, nullspace_dim):
        super().__init__(message)
        self.nullspace_dim = nullspace_dim
