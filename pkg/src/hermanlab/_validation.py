"""Small argument checkers shared by the public functions."""

import math
import numbers

from .errors import DomainError


def check_unit_interval(theta, name="theta", closed_left=False):
    """Return ``theta`` as a float after checking it lies in (0, 1).

    With ``closed_left`` the left endpoint 0 is admitted.
    """
    if isinstance(theta, bool) or not isinstance(theta, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {theta!r}")
    x = float(theta)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {theta!r}")
    lo_ok = x >= 0.0 if closed_left else x > 0.0
    if not (lo_ok and x < 1.0):
        interval = "[0, 1)" if closed_left else "(0, 1)"
        raise DomainError(f"{name} must lie in {interval}, got {theta!r}")
    return x


def check_positive_int(value, name, maximum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 1:
        raise DomainError(f"{name} must be positive, got {value}")
    if maximum is not None and value > maximum:
        raise DomainError(f"{name} must be at most {maximum}, got {value}")
    return value


def check_positive_real(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_complex(value, name, nonzero=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Complex):
        raise DomainError(f"{name} must be a complex number, got {value!r}")
    value = complex(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if nonzero and value == 0:
        raise DomainError(f"{name} must be nonzero")
    return value
