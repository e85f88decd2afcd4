"""Exception types raised across the package."""


class NoSignalError(Exception):
    """Base class for package errors."""


class NonUnitaryError(NoSignalError, ValueError):
    """A local operation failed the unitarity check."""

    def __init__(self, defect, tol):
        self.defect = float(defect)
        self.tol = float(tol)
        super().__init__(f"operator is not unitary: Gram defect {self.defect:.3e} exceeds {self.tol:.1e}")


class ZeroProbabilityOutcome(NoSignalError, ValueError):
    """Collapse onto an outcome whose probability is (numerically) zero."""

    def __init__(self, probability):
        self.probability = float(probability)
        super().__init__(f"outcome probability {self.probability:.3e} is below the collapse threshold")
