"""Exception and warning types shared across the toolkit.

The CLI maps these onto exit codes: config/IO problems -> 2, numerical
failures -> 3, data-quality failures -> 4.
"""


class VaxdynError(Exception):
    """Base class for all toolkit errors."""


class ParamsError(VaxdynError, ValueError):
    """Invalid parameter values or a malformed parameter file."""


class DegeneratePopulationError(VaxdynError, ValueError):
    """Total population is zero; the force of infection is undefined."""


class DegenerateRatesError(VaxdynError, ValueError):
    """An aggregate exit rate k_i vanished; derived quantities are undefined."""


class IntegrationError(VaxdynError, RuntimeError):
    """Adaptive step-size control underflowed (stiffness or blow-up).

    Carries the last time the integrator had a valid state.
    """

    def __init__(self, message, last_good_time):
        super().__init__(f"{message} (last good time t={last_good_time:g})")
        self.last_good_time = last_good_time


class InvalidRegimeError(VaxdynError, ValueError):
    """An operation's parameter-regime precondition does not hold."""


class NoThresholdError(VaxdynError, ValueError):
    """The critical contact rate is undefined (zero denominator)."""


class DegenerateSpectrumError(VaxdynError, RuntimeError):
    """The Jacobian null space at the threshold is not one-dimensional."""


class IngestionError(VaxdynError, ValueError):
    """Case/vaccination CSV files could not be interpreted."""


class CountryNotFoundError(IngestionError):
    """The requested country row is absent from a time-series file."""


class MalformedHeaderError(IngestionError):
    """A time-series file does not follow the wide date-column layout."""


class EmptyWindowError(VaxdynError, ValueError):
    """No vaccination data inside the estimation window."""


class FitFailureError(VaxdynError, RuntimeError):
    """Every candidate evaluation failed; no fit result available."""


class DerivativeInstabilityError(VaxdynError, RuntimeError):
    """Finite-difference derivative estimates disagree across step sizes."""


class UndefinedIndexError(VaxdynError, ValueError):
    """Normalized sensitivity index is undefined (reproduction number is zero)."""


class DataQualityWarning(UserWarning):
    """Recoverable data problem (e.g. a decreasing cumulative count)."""
