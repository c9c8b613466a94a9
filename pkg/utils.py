"""
Error types and argument validation helpers shared by all modules.
"""

import math
import warnings

import numpy as np
from scipy import integrate


class InvalidArgumentError(ValueError):
    """A precondition on an argument does not hold."""


class ResourceLimitError(RuntimeError):
    """An enumeration or rejection loop would exceed its budget."""


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


def require_negative(lam, name='lambda'):
    """
    Validate a strictly negative level.

    Args:
        lam (float): Level to check
        name (str): Name used in the error message

    Returns:
        float: The level as a float
    """
    lam = float(lam)
    if not lam < 0:
        raise InvalidArgumentError(f"{name} must be negative, got {lam}")
    return lam


def require_positive(value, name):
    value = float(value)
    if not value > 0:
        raise InvalidArgumentError(f"{name} must be positive, got {value}")
    return value


def require_nonzero(value, name='lambda'):
    value = float(value)
    if value == 0:
        raise InvalidArgumentError(f"{name} must be nonzero")
    return value


def require_in_range(value, low, high, name, closed_low=True, closed_high=True):
    """
    Validate that a value lies in an interval.

    Args:
        value (float): Value to check
        low (float): Lower end
        high (float): Upper end
        name (str): Name used in the error message
        closed_low (bool): Whether the lower end is included
        closed_high (bool): Whether the upper end is included

    Returns:
        float: The value as a float
    """
    value = float(value)
    above = value >= low if closed_low else value > low
    below = value <= high if closed_high else value < high
    if not (above and below):
        left = '[' if closed_low else '('
        right = ']' if closed_high else ')'
        raise InvalidArgumentError(f"{name} must lie in {left}{low}, {high}{right}, got {value}")
    return value


def require_parity(n, a):
    """
    Validate a lattice bridge endpoint.

    Args:
        n (int): Walk length
        a (int): Endpoint
    """
    if n < 1:
        raise InvalidArgumentError(f"walk length must be >= 1, got {n}")
    if abs(a) > n:
        raise InvalidArgumentError(f"|a| must be <= n, got n={n}, a={a}")
    if (n - a) % 2 != 0:
        raise InvalidArgumentError(f"a must have the parity of n, got n={n}, a={a}")


def require_finite(values, name='values'):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError(f"{name} must be finite")
    return values


def quad(func, a, b, rel_tol=1e-8, abs_tol=1e-13, limit=200, **kw):
    """
    Thin wrapper over scipy.integrate.quad that turns integration warnings into errors.

    Args:
        func (callable): Scalar integrand
        a (float): Lower limit
        b (float): Upper limit (may be np.inf)
        rel_tol (float): Relative tolerance
        abs_tol (float): Absolute tolerance
        limit (int): Maximum number of subintervals
        **kw: Passed through (points, weight, wvar)

    Returns:
        tuple: (value, error estimate)
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', integrate.IntegrationWarning)
        value, error = integrate.quad(
            func, a, b, epsrel=rel_tol, epsabs=abs_tol, limit=limit, **kw
        )
    if not math.isfinite(value):
        raise NumericError(f"quadrature on [{a}, {b}] returned {value}")
    # scipy warns on roundoff even when the estimate is fine; only a large
    # error estimate is fatal
    budget = 100.0 * max(abs_tol, rel_tol * abs(value))
    flagged = [w for w in caught if issubclass(w.category, integrate.IntegrationWarning)]
    if flagged and error > budget:
        raise NumericError(
            f"quadrature on [{a}, {b}] failed: value={value!r}, "
            f"error estimate={error!r}: {flagged[0].message}"
        )
    return value, error
