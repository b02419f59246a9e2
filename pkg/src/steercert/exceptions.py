class SteerCertError(Exception):
    """Base class for all errors raised by steercert."""


class DimensionError(SteerCertError, ValueError):
    pass


class NotUnitaryError(SteerCertError, ValueError):
    pass


class NotHermitianError(SteerCertError, ValueError):
    pass


class InvalidGraphError(SteerCertError, ValueError):
    pass


class InvalidParamsError(SteerCertError, ValueError):
    pass


class UnsupportedFamilyError(SteerCertError, ValueError):
    pass


class EnumerationCapError(SteerCertError, RuntimeError):
    """Raised when an exhaustive enumeration would exceed its size cap."""

    def __init__(self, msg, size):
        super().__init__(msg)
        self.size = size


class NotCertifiableError(SteerCertError, ValueError):
    pass
