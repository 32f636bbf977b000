"""Special functions behind the paired t-test.

The regularized incomplete beta function is evaluated with the modified Lentz
continued fraction, switching to ``I_x(a, b) = 1 - I_{1-x}(b, a)`` above the
mean of the beta distribution where the fraction converges slowly.

Large degrees of freedom push ``x`` towards 1 and make ``lgamma(a + b) -
lgamma(a)`` cancel badly, so callers pass ``1 - x`` separately and the log-beta
term uses a Stirling series for the ratio of gamma functions.
"""

import math
from dataclasses import dataclass

from granger_dr.utils.errors import DomainError

_FPMIN = 1e-300
_MAX_ITER = 5000
_EPS = 1e-14
# above this the truncated Stirling tail is below double precision
_STIRLING_MIN = 20.0


def log_gamma(x):
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def _stirling_tail(z):
    z2 = z * z
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z


def _log_gamma_ratio(big, small):
    """``lgamma(big + small) - lgamma(big)`` for ``big >= _STIRLING_MIN``."""
    return (
        (big - 0.5) * math.log1p(small / big)
        + small * math.log(big + small)
        - small
        + _stirling_tail(big + small)
        - _stirling_tail(big)
    )


def log_beta(a, b):
    if not (a > 0 and b > 0):
        raise DomainError(f"shape parameters must be positive, got a={a}, b={b}")
    small, big = min(a, b), max(a, b)
    if big < _STIRLING_MIN:
        return log_gamma(a) + log_gamma(b) - log_gamma(a + b)
    return log_gamma(small) - _log_gamma_ratio(big, small)


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise DomainError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def _incbeta(a, b, x, y):
    """``I_x(a, b)`` with ``y = 1 - x`` supplied to full precision."""
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    log_x = math.log1p(-y) if x > 0.5 else math.log(x)
    log_y = math.log1p(-x) if y > 0.5 else math.log(y)
    front = math.exp(a * log_x + b * log_y - log_beta(a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def regularized_incomplete_beta(a, b, x):
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if not (a > 0 and b > 0):
        raise DomainError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    return _incbeta(a, b, x, 1.0 - x)


@dataclass(frozen=True)
class TDist:
    dof: int

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise DomainError(f"degrees of freedom must be a positive integer, got {self.dof}")

    def two_sided_p(self, t):
        if not math.isfinite(t):
            raise DomainError(f"t statistic must be finite, got {t}")
        if t == 0.0:
            return 1.0
        nu = float(self.dof)
        t2 = t * t
        # y = 1 - x without cancellation
        x = 1.0 / (1.0 + t2 / nu)
        y = 1.0 / (1.0 + nu / t2)
        p = _incbeta(nu / 2.0, 0.5, x, y)
        return min(1.0, max(0.0, p))

    def cdf(self, t):
        half_tail = 0.5 * self.two_sided_p(t)
        return 1.0 - half_tail if t > 0 else half_tail


def student_t_two_sided_p(t, dof):
    return TDist(dof).two_sided_p(t)
