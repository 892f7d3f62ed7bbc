"""Spatio-temporal covariance function, Gram matrices, and position derivatives.

The covariance is a product of a squared-exponential term in space and an
exponential (Matern-1/2) term in time:

    k(p, p', t, t') = sigma2 * exp(-||p - p'||^2 / (2 ell_s^2) - |t - t'| / ell_t)

Both exponent terms carry a minus sign so the function decays with distance,
which is required for positive semi-definiteness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Added to Gram diagonals before any factorization so that duplicated
# space-time points stay numerically factorable.
JITTER = 1e-10


@dataclass(frozen=True)
class Hyperparams:
    """Kernel and noise parameters of the spatio-temporal covariance."""

    sigma2: float      # signal variance [field-units^2]
    ell_s: float       # spatial length scale [m]
    ell_t: float       # temporal length scale [s]
    noise_var: float   # measurement noise variance [field-units^2]

    def __post_init__(self) -> None:
        if not (self.sigma2 > 0 and self.ell_s > 0 and self.ell_t > 0):
            raise ValueError(
                f"sigma2, ell_s, ell_t must be positive: {self}"
            )
        if not self.noise_var >= 0:
            raise ValueError(f"noise_var must be non-negative: {self.noise_var}")


def _check_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("kernel inputs must be finite")


def eval_kernel(p, p_prime, t: float, t_prime: float, h: Hyperparams) -> float:
    """Covariance between two space-time points."""
    p = np.asarray(p, dtype=float)
    p_prime = np.asarray(p_prime, dtype=float)
    _check_finite(p, p_prime, t, t_prime)
    sq = float(np.sum((p - p_prime) ** 2))
    dt = abs(float(t) - float(t_prime))
    return h.sigma2 * np.exp(-sq / (2.0 * h.ell_s**2) - dt / h.ell_t)


def gram(positions, times, h: Hyperparams, add_noise: bool = False) -> np.ndarray:
    """Gram matrix over the given (position, time) list.

    Entry (a, b) is ``eval_kernel(positions[a], positions[b], times[a],
    times[b], h)``.  With ``add_noise`` the measurement noise variance is
    added to every diagonal entry.
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    times = np.asarray(times, dtype=float).ravel()
    if positions.shape[0] == 0:
        raise ValueError("gram requires at least one point")
    if positions.shape[0] != times.shape[0]:
        raise ValueError("positions and times must have equal length")
    _check_finite(positions, times)
    k = cross_gram(positions, times, positions, times, h)
    if add_noise:
        k = k + h.noise_var * np.eye(len(times))
    return k


def cross_gram(positions_a, times_a, positions_b, times_b, h: Hyperparams) -> np.ndarray:
    """Rectangular covariance block between two point lists."""
    pa = np.atleast_2d(np.asarray(positions_a, dtype=float))
    pb = np.atleast_2d(np.asarray(positions_b, dtype=float))
    ta = np.asarray(times_a, dtype=float).ravel()
    tb = np.asarray(times_b, dtype=float).ravel()
    _check_finite(pa, pb, ta, tb)
    sq = np.sum((pa[:, None, :] - pb[None, :, :]) ** 2, axis=-1)
    dt = np.abs(ta[:, None] - tb[None, :])
    return h.sigma2 * np.exp(-sq / (2.0 * h.ell_s**2) - dt / h.ell_t)


def kernel_grad_position(p, p_prime, t: float, t_prime: float, h: Hyperparams) -> np.ndarray:
    """Gradient of the covariance with respect to the first position argument."""
    p = np.asarray(p, dtype=float)
    p_prime = np.asarray(p_prime, dtype=float)
    k = eval_kernel(p, p_prime, t, t_prime, h)
    return -(p - p_prime) / h.ell_s**2 * k
