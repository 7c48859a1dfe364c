"""Exception types raised by specmom."""


class MatrixFormatError(ValueError):
    """A Matrix Market file could not be turned into a symmetric operator."""


class NotDiagonalError(ValueError):
    """Modal tracking was requested on a matrix that is not diagonal."""


class NoCrossoverError(ValueError):
    """Restarted Lanczos never catches up with optimal momentum for these gaps."""


class DivergenceError(ValueError):
    """Momentum parameter is too large for the iteration to converge."""


class BreakdownError(RuntimeError):
    """The momentum update vanished (``u = 0``), so it cannot be normalized."""


class SpectralTieError(RuntimeError):
    """The two largest-magnitude Ritz values coincide in magnitude."""
