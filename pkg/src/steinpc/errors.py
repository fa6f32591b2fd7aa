class SteinPCError(Exception):
    """Base class for data and numerical failures (CLI exit code 2)."""


class DegenerateInputError(SteinPCError, ValueError):
    """Zero norm, zero variance or an otherwise undefined quantity."""


class RankDegenerateError(SteinPCError):
    """The data matrix has a zero leading eigenvalue."""


class InconsistentSpectrumError(SteinPCError):
    """Eigenvalues that cannot come from the stated trace."""


class ConvergenceError(SteinPCError):
    """An iterative solver ran out of sweeps."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class DirectPathTooLarge(SteinPCError, ValueError):
    """Forming the p x p sample covariance was refused; use the dual path."""
