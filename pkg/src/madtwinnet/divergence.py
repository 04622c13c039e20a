"""Generalized Kullback-Leibler divergence for non-negative matrices."""
import numpy as np

from .exceptions import InvalidArgumentError

KL_EPS = 1e-6


def generalized_kl(target, estimate, eps=KL_EPS):
    """``sum(a * ln(max(a, eps) / max(b, eps)) - a + b)`` for non-negative ``a``, ``b``.

    Both arguments are floored at ``eps`` inside the logarithm only, so the
    divergence of a matrix from itself is exactly zero and ``0 * ln 0 = 0``.
    """
    a = np.asarray(target, dtype=np.float64)
    b = np.asarray(estimate, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"target {a.shape} and estimate {b.shape} differ in shape")
    if np.any(a < 0) or np.any(b < 0):
        raise InvalidArgumentError("generalized KL needs non-negative entries")
    log_ratio = np.log(np.maximum(a, eps)) - np.log(np.maximum(b, eps))
    return float(np.sum(a * log_ratio - a + b))


def generalized_kl_grad(target, estimate, eps=KL_EPS):
    """Derivative of :func:`generalized_kl` with respect to the estimate."""
    b = np.asarray(estimate, dtype=np.float64)
    return 1.0 - np.where(b > eps, target / np.maximum(b, eps), 0.0)
