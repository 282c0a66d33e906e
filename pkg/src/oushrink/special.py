"""Special functions and the shrinkage constants built from them.

``gamma_fn``/``lgamma_fn`` use a Lanczos approximation (g = 7, nine terms),
``integral_I`` evaluates ``int_0^inf exp(-r^2/2) / (a + r) dr`` and the lower
bound constant for ``E 1/||Y||`` is available both through its alternating
closed form and through direct quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .quadrature import adaptive_simpson

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Gamma(x) overflows a double just above this.
GAMMA_OVERFLOW = 171.62

# Truncation radius for integral_I: int_9^inf exp(-r^2/2) dr < 1e-18.
TAIL_RADIUS = 9.0
QUAD_TOL = 1e-11


def _lanczos_sum(x: float) -> float:
    s = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        s += _LANCZOS_COEF[i] / (x + i)
    return s


def lgamma_fn(x: float) -> float:
    """log Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"lgamma_fn requires x > 0, got {x!r}")
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - lgamma_fn(1.0 - x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma_fn(x: float) -> float:
    """Gamma(x) for 0 < x <= 171.62 (relative error ~1e-15).

    Raises :class:`DomainError` for x <= 0 and :class:`OverflowError` when the
    result does not fit in a double; use :func:`lgamma_fn` there.
    """
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x!r}")
    if x > GAMMA_OVERFLOW:
        raise OverflowError(f"Gamma({x}) overflows a double; use lgamma_fn")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * math.exp((z + 0.5) * math.log(t) - t) * _lanczos_sum(z)


def integral_I(a: float) -> float:
    """``int_0^inf exp(-r^2/2) / (a + r) dr`` for a > 0.

    The integral diverges logarithmically as a -> 0+, so a = 0 is rejected.
    """
    if not a > 0:
        raise DomainError(f"integral_I requires a > 0 (diverges at a = 0), got {a!r}")
    return adaptive_simpson(lambda r: math.exp(-0.5 * r * r) / (a + r), 0.0, TAIL_RADIUS, QUAD_TOL)


@dataclass(frozen=True)
class GammaPInputs:
    """Dimension ``p``, parameter-set radius ``d`` and eigenvalue bound ``a_star``."""

    p: int
    d: float
    a_star: float

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise DomainError(f"p must be an integer >= 2, got {self.p!r}")
        if not self.d > 0:
            raise DomainError(f"d must be positive, got {self.d!r}")
        if not self.a_star > 0:
            raise DomainError(f"a_star must be positive, got {self.a_star!r}")

    @property
    def mu(self) -> float:
        return self.d / math.sqrt(self.a_star)


def gamma_p_closed(inp: GammaPInputs) -> float:
    """Alternating-sum closed form of the constant.

    Numerically reliable only for small p (say p <= 20); the sum cancels
    catastrophically as p grows.
    """
    p, d, mu = inp.p, inp.d, inp.mu
    s = 0.0
    for j in range(p - 1):
        sign = -1.0 if (p - j) % 2 else 1.0
        s += 2.0 ** ((j - 1) / 2.0) * sign * mu ** (p - 1 - j) * gamma_fn((j + 1) / 2.0)
    s -= (-mu) ** p * integral_I(mu)
    return s / (2.0 ** (p / 2.0 - 1.0) * gamma_fn(p / 2.0) * d)


def gamma_p_quadrature(inp: GammaPInputs) -> float:
    """The constant as ``mu / (2^{p/2-1} Gamma(p/2) d) * int_0^inf r^{p-1} e^{-r^2/2} / (mu + r) dr``.

    The normalising factor is folded into the integrand in log space (it is the
    chi_p density), so this stays finite for large p.  Canonical route.
    """
    p, d, mu = inp.p, inp.d, inp.mu
    log_norm = (p / 2.0 - 1.0) * math.log(2.0) + lgamma_fn(p / 2.0)

    def integrand(r: float) -> float:
        if r == 0.0:
            return 0.0
        return math.exp((p - 1) * math.log(r) - 0.5 * r * r - log_norm) / (mu + r)

    upper = math.sqrt(p - 1.0) + TAIL_RADIUS + 1.0
    return mu / d * adaptive_simpson(integrand, 0.0, upper, QUAD_TOL)


def gamma_p(p: int, d: float, a_star: float) -> float:
    """Convenience wrapper around :func:`gamma_p_quadrature`."""
    return gamma_p_quadrature(GammaPInputs(p, d, a_star))


def gamma_p_zero_radius(p: int, a_star: float = 1.0) -> float:
    """Limit of the constant as ``d -> 0``: ``E 1/||xi||`` for ``xi ~ N(0, a_star I_p)``.

    Equals ``Gamma((p-1)/2) / (sqrt(2 a_star) Gamma(p/2))``.  With
    ``c = (p-1) * gamma_p_zero_radius(p)`` the shrinkage estimator attains the
    risk :func:`risk_at_zero_rp` at theta = 0 under identity covariance.
    """
    if int(p) != p or p < 2:
        raise DomainError(f"p must be an integer >= 2, got {p!r}")
    if not a_star > 0:
        raise DomainError(f"a_star must be positive, got {a_star!r}")
    return math.exp(lgamma_fn((p - 1) / 2.0) - lgamma_fn(p / 2.0)) / math.sqrt(2.0 * a_star)


def risk_at_zero_rp(p: int) -> float:
    """Risk at theta = 0, identity covariance: ``p - [(p-1) G((p-1)/2) / (sqrt2 G(p/2))]^2``."""
    if int(p) != p or p < 2:
        raise DomainError(f"p must be an integer >= 2, got {p!r}")
    ratio = math.exp(lgamma_fn((p - 1) / 2.0) - lgamma_fn(p / 2.0))
    return p - ((p - 1) * ratio / math.sqrt(2.0)) ** 2
