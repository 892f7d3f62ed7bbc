"""Exact spatio-temporal Gaussian-process regression and log-det entropy objectives.

All linear solves go through a jittered Cholesky factorization; explicit
matrix inverses are never formed for conditioning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from stipp import kernel
from stipp.kernel import JITTER, Hyperparams

LOG_2PI = math.log(2.0 * math.pi)
LOG_2PI_E = math.log(2.0 * math.pi * math.e)


class NumericalError(RuntimeError):
    """Raised when a covariance factorization fails beyond jitter repair."""


@dataclass(frozen=True)
class Dataset:
    """A robot's fused collection of (position, timestamp, value) triples.

    Provenance keys ``(robot_id, step_index)`` give the collection set
    semantics: two triples are the same observation iff their keys match.
    """

    positions: np.ndarray    # (n, l) [m]
    timestamps: np.ndarray   # (n,)   [s]
    values: np.ndarray       # (n,)   [field-units]
    provenance: tuple        # n unique (id, index) keys

    def __post_init__(self) -> None:
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        ts = np.asarray(self.timestamps, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        prov = tuple(tuple(k) for k in self.provenance)
        if pos.shape[0] == 0:
            pos = pos.reshape(0, pos.shape[1] if pos.ndim == 2 and pos.shape[1] else 2)
        if not (pos.shape[0] == ts.shape[0] == vals.shape[0] == len(prov)):
            raise ValueError("positions, timestamps, values, provenance must have equal length")
        if len(set(prov)) != len(prov):
            raise ValueError("provenance keys must be unique")
        if ts.size and np.min(ts) < 0:
            raise ValueError("timestamps must be non-negative")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "provenance", prov)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def empty(cls, dim: int = 2) -> "Dataset":
        return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(0), ())

    def triples(self) -> dict:
        """Provenance-keyed view, as exchanged between robots."""
        return {
            key: (tuple(self.positions[i]), float(self.timestamps[i]), float(self.values[i]))
            for i, key in enumerate(self.provenance)
        }


@dataclass(frozen=True)
class Posterior:
    """Gaussian posterior over query points: mean vector and covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("cov dimension must match mean length")
        if not np.allclose(cov, cov.T, atol=1e-8):
            raise ValueError("cov must be symmetric")
        if cov.size and np.min(np.diag(cov)) < -1e-8:
            raise ValueError("cov diagonal must be non-negative up to tolerance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))


def _chol(mat: np.ndarray, jitter: float = JITTER):
    """Cholesky factor of ``mat + jitter*I``; NumericalError on failure."""
    n = mat.shape[0]
    try:
        return cho_factor(mat + jitter * np.eye(n), lower=True)
    except np.linalg.LinAlgError as exc:
        diag = np.diag(mat)
        raise NumericalError(
            f"Cholesky failed for {n}x{n} covariance "
            f"(diag range [{diag.min():.3g}, {diag.max():.3g}], jitter {jitter:g})"
        ) from exc


def _logdet_from_factor(factor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(factor[0]))))


def posterior(train: Dataset, query_positions, query_times, h: Hyperparams,
              prior_mean: float = 0.0) -> Posterior:
    """Condition the GP on the training set at the given query points.

    The prior mean is a scenario-wide constant shared by all robots.
    """
    if len(train) == 0:
        raise ValueError("posterior requires a non-empty training set")
    qp = np.atleast_2d(np.asarray(query_positions, dtype=float))
    qt = np.asarray(query_times, dtype=float).ravel()
    if qp.shape[0] == 0:
        raise ValueError("posterior requires at least one query point")

    k_dd = kernel.gram(train.positions, train.timestamps, h, add_noise=True)
    k_dq = kernel.cross_gram(train.positions, train.timestamps, qp, qt, h)
    k_qq = kernel.gram(qp, qt, h, add_noise=False)

    factor = _chol(k_dd)
    alpha = cho_solve(factor, train.values - prior_mean)
    mean = prior_mean + k_dq.T @ alpha
    v = cho_solve(factor, k_dq)
    cov = k_qq - k_dq.T @ v
    cov = 0.5 * (cov + cov.T)
    return Posterior(mean, cov)


def log_marginal_likelihood(train: Dataset, h: Hyperparams, prior_mean: float = 0.0) -> float:
    """Gaussian log evidence of the training values under constant mean."""
    if len(train) == 0:
        raise ValueError("log_marginal_likelihood requires a non-empty training set")
    k_dd = kernel.gram(train.positions, train.timestamps, h, add_noise=True)
    factor = _chol(k_dd)
    resid = train.values - prior_mean
    alpha = cho_solve(factor, resid)
    n = len(train)
    return -0.5 * float(resid @ alpha) - 0.5 * _logdet_from_factor(factor) - 0.5 * n * LOG_2PI


def fit_hyperparams(train: Dataset, grid: Sequence[Hyperparams],
                    prior_mean: float = 0.0) -> Hyperparams:
    """Pick the grid element with the highest log marginal likelihood.

    Ties are broken by first occurrence.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("hyperparameter grid must be non-empty")
    if len(train) == 0:
        raise ValueError("fit_hyperparams requires a non-empty training set")
    best, best_score = None, -math.inf
    for cand in grid:
        score = log_marginal_likelihood(train, cand, prior_mean)
        if score > best_score:
            best, best_score = cand, score
    return best


def entropy_logdet(cov: np.ndarray) -> float:
    """Differential entropy of a Gaussian with the given covariance."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    factor = _chol(cov)
    return 0.5 * _logdet_from_factor(factor) + 0.5 * n * LOG_2PI_E


def neg_logdet_and_grad(train: Dataset, cand_positions, cand_times,
                        h: Hyperparams) -> tuple[float, np.ndarray]:
    """Negative log-det of the posterior covariance at a candidate path,
    with its analytic gradient with respect to the candidate positions.

    The candidate is any list of waypoints paired with prediction times (a
    single path or several stacked paths).  Returns ``(f, grad)`` with
    ``grad`` flattened waypoint-major, matching ``cand_positions.ravel()``.
    """
    if len(train) == 0:
        raise ValueError("neg_logdet_and_grad requires a non-empty training set")
    q = np.atleast_2d(np.asarray(cand_positions, dtype=float))
    qt = np.asarray(cand_times, dtype=float).ravel()
    m = q.shape[0]
    if m == 0:
        raise ValueError("candidate path must contain at least one waypoint")

    k_dd = kernel.gram(train.positions, train.timestamps, h, add_noise=True)
    k_dq = kernel.cross_gram(train.positions, train.timestamps, q, qt, h)
    k_qq = kernel.gram(q, qt, h, add_noise=False)

    factor_d = _chol(k_dd)
    w = cho_solve(factor_d, k_dq)                   # (n, m)
    cov = k_qq - k_dq.T @ w
    cov = 0.5 * (cov + cov.T)
    factor_c = _chol(cov)
    f = -_logdet_from_factor(factor_c)

    minv = cho_solve(factor_c, np.eye(m))           # posterior precision
    wm = w @ minv                                   # (n, m)

    # d k(q_r, q_a) / d q_r and d k(d_j, q_r) / d q_r, batched over pairs.
    dq = -(q[:, None, :] - q[None, :, :]) / h.ell_s**2 * k_qq[:, :, None]
    dd = -(q[None, :, :] - train.positions[:, None, :]) / h.ell_s**2 * k_dq[:, :, None]

    # d(-logdet cov) = -tr(cov^-1 dcov) with dcov assembled from both the
    # query block and the cross block.
    grad = -2.0 * (np.einsum("ra,rac->rc", minv, dq) - np.einsum("jr,jrc->rc", wm, dd))
    return f, grad.ravel()
