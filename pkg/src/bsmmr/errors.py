"""Exception hierarchy shared across the package."""


class BsmmrError(Exception):
    """Base class for all package errors."""


class ValidationError(BsmmrError):
    """Aggregate of several validation failures."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class DimensionMismatch(BsmmrError):
    pass


class ObservationOutOfBox(BsmmrError):
    pass


class BadHyperparameter(BsmmrError):
    pass


class TrialsMissing(BsmmrError):
    pass


class OutOfDomain(BsmmrError):
    pass


class EmptySubprocess(BsmmrError):
    pass


class CapacityExceeded(BsmmrError):
    pass


class MonotoneViolation(BsmmrError):
    pass


class DomainNotCovered(BsmmrError):
    pass


class EmptyChain(BsmmrError):
    pass


class TooFewObservations(BsmmrError):
    pass


class SingularCovariance(BsmmrError):
    pass


class ConfigError(BsmmrError):
    """Bad or unknown keys in a run configuration document."""
