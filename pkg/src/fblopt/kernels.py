"""Scalar kernels: Gaussian tail Q, its inverse, channel dispersion, and the
normal-approximation achievable rate for finite-blocklength coding.

All functions are pure, accept scalars or numpy arrays, and use natural
logarithms (rates in nats per channel use).
"""

import numpy as np
from scipy.special import erfc, ndtri

# Callers clamp error probabilities to this floor before calling q_inverse;
# the kernel itself rejects out-of-domain input so optimizer bugs cannot be
# masked by silent clamping.
EPS_FLOOR = 1e-12

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def q_function(x):
    """Gaussian tail probability Q(x) = P[N(0,1) > x].

    Computed as erfc(x/sqrt(2))/2, which keeps full relative accuracy deep
    into the tail (outputs down to ~1e-300).
    """
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(x / _SQRT2)
    return float(out) if out.ndim == 0 else out


def _phi(y):
    """Standard normal density."""
    return _INV_SQRT_2PI * np.exp(-0.5 * y * y)


def q_inverse(eps):
    """Inverse of q_function on (0, 0.5).

    A library inverse-normal evaluation provides the starting point and two
    safeguarded Newton steps on q_function polish it, so the round trip
    q_function(q_inverse(eps)) agrees with eps to better than 1e-12 relative.

    Raises ValueError for eps outside the open interval (0, 0.5).
    """
    e = np.asarray(eps, dtype=float)
    if np.any(e <= 0.0) or np.any(e >= 0.5):
        raise ValueError("q_inverse requires 0 < eps < 0.5")
    y = -ndtri(e)
    # Newton on Q(y) = eps: y <- y + (Q(y) - eps)/phi(y); stays in [0, 50].
    for _ in range(2):
        y = np.clip(y + (0.5 * erfc(y / _SQRT2) - e) / _phi(y), 0.0, 50.0)
    return float(y) if y.ndim == 0 else y


def dispersion_coeff(snr, block_length):
    """Square-root dispersion penalty sqrt((1/L) * (1 - (1+snr)^-2)).

    Evaluated as snr*(snr+2)/(1+snr)^2 inside the radical to avoid
    cancellation at small snr. Lies in [0, sqrt(1/L)) and increases with snr.
    """
    s = np.asarray(snr, dtype=float)
    v = s * (s + 2.0) / np.square(1.0 + s)
    out = np.sqrt(v / block_length)
    return float(out) if out.ndim == 0 else out


def achievable_rate(snr, block_length, eps):
    """Normal-approximation achievable rate in nats per channel use:

        log(1+snr) - sqrt((1/L)(1-(1+snr)^-2)) * Qinv(eps) + log(L)/L

    The raw value is returned and may be negative; clamping to zero is the
    responsibility of throughput reporting, not of this kernel. Converges to
    the Shannon rate log(1+snr) as the block length grows.
    """
    L = block_length
    out = (
        np.log1p(np.asarray(snr, dtype=float))
        - dispersion_coeff(snr, L) * q_inverse(eps)
        + np.log(L) / L
    )
    return float(out) if np.ndim(out) == 0 else out
