"""Normal-distribution special functions and numerically safe reductions.

Scalar and array inputs are both accepted; scalars come back as Python floats.
"""

import math

import numpy as np
from scipy import special as _sp

LOG_2PI = math.log(2.0 * math.pi)


class DomainError(ValueError):
    """Raised when an argument lies outside a function's domain."""


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _unwrap(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def std_normal_cdf(x):
    """Standard normal CDF.

    Evaluated through the complementary error function so that both tails
    keep full relative precision.
    """
    arr = _as_float_array(x, "x")
    return _unwrap(_sp.ndtr(arr))


def std_normal_sf(x):
    """Upper tail ``1 - Phi(x)`` without cancellation."""
    arr = _as_float_array(x, "x")
    return _unwrap(_sp.ndtr(-arr))


def std_normal_icdf(p):
    """Inverse of :func:`std_normal_cdf`.

    Parameters
    ----------
    p : float or array_like
        Probabilities strictly inside ``(0, 1)``. Callers that may produce
        saturated values must clamp before calling.

    Returns
    -------
    float or ndarray
        Quantiles of the standard normal distribution.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("p must lie strictly inside (0, 1)")
    q = _sp.ndtri(arr)
    # one Newton step on Phi; the rational approximation is already close
    inner = np.abs(q) < 8.0
    qs = np.where(inner, q, 0.0)
    resid = _sp.ndtr(qs) - arr
    q = np.where(inner, q - resid * np.sqrt(2.0 * np.pi) * np.exp(0.5 * qs * qs), q)
    return _unwrap(q)


def normal_logpdf(x, mean, variance):
    """Log density of ``N(mean, variance)`` evaluated at ``x`` (broadcasting)."""
    var = np.asarray(variance, dtype=float)
    if np.any(~(var > 0.0)):
        raise DomainError("variance must be positive")
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    out = -0.5 * (LOG_2PI + np.log(var)) - (x - mean) ** 2 / (2.0 * var)
    return _unwrap(out)


def log_sum_exp(values, log_weights=None, axis=None):
    """Stable ``log(sum(exp(log_weights + values)))``.

    ``log_weights`` may contain ``-inf`` entries (zero weight). With ``axis``
    set, the reduction runs along that axis and an array is returned.
    """
    v = np.asarray(values, dtype=float)
    if log_weights is not None:
        lw = np.asarray(log_weights, dtype=float)
        if lw.shape != v.shape:
            raise DomainError("values and log_weights must have equal shapes")
        v = v + lw
    if v.size == 0:
        raise DomainError("log_sum_exp of an empty input")
    m = np.max(v, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(v - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)


def softmax(logits, axis=-1):
    """Row-wise softmax."""
    z = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(logits, axis=-1):
    z = logits - np.max(logits, axis=axis, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))
