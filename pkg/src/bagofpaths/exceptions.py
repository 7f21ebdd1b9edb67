"""Exception types raised by the package."""


class BagOfPathsError(Exception):
    """Base class for all domain errors raised by :mod:`bagofpaths`."""


class GraphFormatError(BagOfPathsError, ValueError):
    """Malformed edge-list or labels file.

    ``lineno`` is the 1-based line of the offending record, when known.
    """

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class NotStronglyConnectedError(BagOfPathsError, ValueError):
    pass


class SpectralRadiusError(BagOfPathsError, ValueError):
    """Weight matrix with spectral radius too close to (or above) one."""

    def __init__(self, rho, margin):
        super().__init__(
            f"spectral radius {rho:.12g} >= 1 - margin (margin={margin:g}); "
            "the Neumann series of W does not converge safely"
        )
        self.rho = rho
        self.margin = margin


class ConvergenceError(BagOfPathsError, RuntimeError):
    pass


class NumericalDegeneracyError(BagOfPathsError, ArithmeticError):
    """A denominator that is provably positive came out (near) zero."""


class DegenerateVarianceError(NumericalDegeneracyError):
    def __init__(self, node, variance):
        super().__init__(
            f"variance of node index {node} is {variance:.3g}; "
            "correlation is undefined"
        )
        self.node = node
        self.variance = variance
