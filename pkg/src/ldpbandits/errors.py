"""Exception types shared across the library."""


class LdpBanditsError(Exception):
    """Base class for all library errors."""


class CalibrationError(LdpBanditsError, ValueError):
    """Invalid privacy parameters or sensitivity for a noise calibration."""


class ConfigurationError(LdpBanditsError, ValueError):
    """Algorithm or experiment parameters violate a feasibility requirement."""


class ContractViolation(LdpBanditsError):
    """A declared bound (loss range, Lipschitz constant, norm cap) was breached.

    Raised instead of silently clipping: clipping would change the
    sensitivity the noise was calibrated for.
    """


class NumericalError(LdpBanditsError):
    """A numerical routine (root-find, linear solve) failed to converge."""
