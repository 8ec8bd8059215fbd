"""Numerical kernels for the closed-form error-rate engine.

Everything here is a pure function of its arguments.  Quadrature rules are
cached per order and their arrays are frozen, so they are safe to share
across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

# Constant term of the closed-form harmonic-number approximation.
_HARMONIC_CONST = 0.57722

_SQRT2 = math.sqrt(2.0)


class NumericError(RuntimeError):
    """A numerical routine failed to reach its target accuracy."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for the weight function exp(-x^2) on the real line.

    Weights sum to sqrt(pi); nodes are strictly increasing and symmetric
    about zero.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def gauss_hermite(order: int) -> QuadratureRule:
    """Return the Gauss-Hermite rule of the given order.

    The rule integrates exp(-x^2) * p(x) exactly for polynomials p of
    degree up to 2*order - 1.
    """
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    nodes, weights = special.roots_hermite(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(order=order, nodes=nodes, weights=weights)


def q_exact(x):
    """Gaussian tail probability Q(x), computed from erfc."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)


def q_approx(x):
    """Two-exponential fit of the Gaussian tail, exp(-x^2/2)/12 + exp(-2x^2/3)/4.

    Intended for x >= 0; q_approx(0) is exactly 1/3.
    """
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / 12.0 + np.exp(-2.0 * x * x / 3.0) / 4.0


def harmonic_approx(count: int) -> float:
    """Approximate the count-th harmonic number as ln(m) + 1/(2m) + 0.57722."""
    if count < 1:
        raise ValueError(f"harmonic index must be >= 1, got {count}")
    return math.log(count) + 0.5 / count + _HARMONIC_CONST


def gamma_fn(x):
    """Gamma function restricted to positive arguments."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("gamma_fn is only defined for positive arguments here")
    return special.gamma(x)


def _cylinder_peak(omega: float, z: float) -> float:
    """Mode of exp(omega*s - z*e^s - e^(2s)/2), the log-substituted integrand."""
    return math.log(0.5 * (-z + math.sqrt(z * z + 4.0 * omega)))


def log_pcf_d(neg_order: float, argument: float) -> float:
    """Natural log of the parabolic cylinder function D_{-omega}(z), omega > 0.

    Evaluates the real-axis integral representation

        D_{-omega}(z) = exp(-z^2/4) / Gamma(omega)
                        * int_0^inf t^(omega-1) exp(-z*t - t^2/2) dt

    after the substitution t = e^s, which removes the endpoint singularity
    for omega < 1.  The integrand is peak-normalized so the result stays
    finite for large omega or strongly negative z, where D itself would
    overflow or underflow a double.
    """
    omega = float(neg_order)
    z = float(argument)
    if omega <= 0.0:
        raise ValueError(f"order must be positive, got {omega}")

    s_peak = _cylinder_peak(omega, z)
    shift = omega * s_peak - z * math.exp(s_peak) - 0.5 * math.exp(2.0 * s_peak)

    def body(s):
        if s > 300.0:  # t^2 term has long since driven the integrand to 0
            return 0.0
        t = math.exp(s)
        exponent = omega * s - z * t - 0.5 * t * t - shift
        return math.exp(exponent) if exponent > -745.0 else 0.0

    left, err_l = integrate.quad(body, -np.inf, s_peak, epsabs=1e-13,
                                 epsrel=1e-11, limit=200)
    right, err_r = integrate.quad(body, s_peak, np.inf, epsabs=1e-13,
                                  epsrel=1e-11, limit=200)
    total = left + right
    if not np.isfinite(total) or total <= 0.0 or (err_l + err_r) > 1e-9 * total:
        raise NumericError(
            "cylinder-function quadrature did not converge: "
            f"omega={omega}, z={z}, value={total}, abserr={err_l + err_r}"
        )
    return -0.25 * z * z - math.lgamma(omega) + shift + math.log(total)


def pcf_d(neg_order: float, argument: float) -> float:
    """Parabolic cylinder function D_{-omega}(z) for omega > 0, real z."""
    return math.exp(log_pcf_d(neg_order, argument))
