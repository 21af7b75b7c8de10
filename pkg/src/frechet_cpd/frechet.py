"""Log-Euclidean Frechet means and variances, and their one-pass split statistics.

Under the Log-Euclidean metric the space of SPD matrices is flat in log
coordinates, so the Frechet mean of ``X_1..X_n`` is ``exp(mean(log X_i))``
and the Frechet variance is the mean squared Frobenius distance of the logs
to their average. Everything here therefore takes a *log sequence*: an
``(n, N, N)`` array of already-logged matrices, and only exponentiates when a
caller asks for an SPD mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError
from .spd import matrix_exp


def as_log_sequence(items, min_length: int = 1) -> np.ndarray:
    """Validate and return an ``(n, N, N)`` float array view of ``items``.

    Arrays (including memmaps) of the right shape and dtype are returned
    without copying.
    """
    if isinstance(items, np.ndarray) and items.dtype == np.float64:
        seq = items
    elif isinstance(items, np.ndarray):
        seq = items.astype(float)
    else:
        items = list(items)
        if not items:
            raise InputError("empty sequence")
        seq = np.stack([np.asarray(x, dtype=float) for x in items])
    if seq.ndim != 3 or seq.shape[1] != seq.shape[2]:
        raise InputError(f"log sequence must have shape (n, N, N), got {seq.shape}")
    if seq.shape[0] < min_length:
        if seq.shape[0] == 0:
            raise InputError("empty sequence")
        raise InputError(f"sequence needs at least {min_length} items, got {seq.shape[0]}")
    return seq


def _squared_distances(seq: np.ndarray, center: np.ndarray) -> np.ndarray:
    flat = seq.reshape(seq.shape[0], -1)
    diff = flat - center.reshape(-1)
    return np.einsum("ij,ij->i", diff, diff)


def frechet_mean(seq):
    """Log-Euclidean Frechet mean.

    Returns
    -------
    log_mean : numpy.ndarray
        Arithmetic mean of the logs.
    spd_mean : numpy.ndarray
        ``matrix_exp(log_mean)``.
    """
    seq = as_log_sequence(seq)
    log_mean = seq.mean(axis=0)
    return log_mean, matrix_exp(log_mean)


def frechet_variance(seq) -> float:
    """Mean squared Log-Euclidean distance to the Frechet mean."""
    seq = as_log_sequence(seq)
    center = seq.mean(axis=0)
    return float(max(_squared_distances(seq, center).mean(), 0.0))


def sigma_hat_sq(seq) -> float:
    """Empirical variance of the squared distances to the Frechet mean.

    This is the plug-in estimate of the asymptotic variance of the sample
    Frechet variance, ``mean(d^4) - mean(d^2)^2``, computed in the centred
    two-pass form and clamped at zero.
    """
    seq = as_log_sequence(seq, min_length=2)
    d2 = _squared_distances(seq, seq.mean(axis=0))
    return float(max(np.var(d2), 0.0))


def _frob(a, b) -> float:
    """Frobenius inner product of two flattened matrices."""
    return float(np.dot(a, b))


@dataclass(frozen=True)
class SegmentStats:
    """Split statistics of a log sequence for every split ``t``.

    Split ``t`` puts items ``0..t-1`` on the left and ``t..n-1`` on the right.
    All arrays have length ``n + 1`` and are indexed by ``t``: ``forward_*[t]``
    describes the prefix of length ``t`` and ``backward_*[t]`` the suffix
    starting at ``t``. Entries whose segment is empty are NaN, and the
    contaminated variances are only defined on ``1 <= t <= n - 1``.

    ``mean_gap_sq[t]`` is ``||mean(right) - mean(left)||_F^2``, which is exactly
    the excess of each contaminated variance over its own variance.
    ``forward_mean``/``backward_mean`` are ``(n + 1, N, N)`` when the means
    were kept, else None.
    """

    n: int
    forward_var: np.ndarray
    backward_var: np.ndarray
    forward_var_c: np.ndarray
    backward_var_c: np.ndarray
    mean_gap_sq: np.ndarray
    mean_sq_norm: float
    forward_mean: Optional[np.ndarray] = None
    backward_mean: Optional[np.ndarray] = None

    @property
    def total_var(self) -> float:
        """Frechet variance of the whole sequence."""
        return float(self.forward_var[self.n])

    @property
    def splits(self) -> np.ndarray:
        return np.arange(1, self.n)


def _sweep(flat: np.ndarray, order, keep_means: bool):
    """One Welford pass over ``flat[order]``; returns variances (and means) by count."""
    n, d = flat.shape
    var = np.full(n + 1, np.nan)
    means = np.full((n + 1, d), np.nan) if keep_means else None
    first = order[0]
    mu = flat[first].copy()
    v = 0.0
    var[1] = v
    if keep_means:
        means[1] = mu
    for t in range(2, n + 1):
        x = flat[order[t - 1]]
        mu_new = ((t - 1) / t) * mu + x / t
        v = ((t - 1) / t) * v + _frob(x - mu, x - mu_new) / t
        mu = mu_new
        var[t] = v
        if keep_means:
            means[t] = mu
    return var, means, mu


def incremental_segment_stats(seq, keep_means: bool = False) -> SegmentStats:
    """Prefix and suffix Frechet statistics for all splits in two sweeps.

    The forward sweep runs the Welford recursion over ``items[0..n-1]``; the
    backward sweep runs it over ``items[n-1..0]`` so suffix statistics are
    accumulated from the end, not derived by subtraction. Cost is
    ``O(n N^2)`` time and, without ``keep_means``, ``O(N^2)`` extra memory.

    Parameters
    ----------
    seq : (n, N, N) array_like
        Log sequence with ``n >= 2``.
    keep_means : bool
        Store every prefix and suffix mean (``2 (n + 1) N^2`` floats). The
        mean gap is then taken directly as the difference of the stored
        means. Otherwise it is obtained during the forward sweep from
        ``mean(right) - mean(left) = n / (n - t) * (mean_all - mean(left))``.
    """
    seq = as_log_sequence(seq, min_length=2)
    n = seq.shape[0]
    flat = seq.reshape(n, -1)

    bwd_var_by_len, bwd_means_by_len, mu_all = _sweep(flat, range(n - 1, -1, -1), keep_means)
    # re-index suffix statistics by start position: suffix starting at t has n - t items
    backward_var = bwd_var_by_len[::-1].copy()
    backward_var[n] = np.nan

    gap = np.full(n + 1, np.nan)
    fwd_means = None
    if keep_means:
        fwd_var, fwd_means, _ = _sweep(flat, range(n), True)
        bwd_means = bwd_means_by_len[::-1].copy()
        for t in range(1, n):
            diff = bwd_means[t] - fwd_means[t]
            gap[t] = _frob(diff, diff)
        forward_mean = fwd_means.reshape(n + 1, *seq.shape[1:])
        backward_mean = bwd_means.reshape(n + 1, *seq.shape[1:])
    else:
        fwd_var = np.full(n + 1, np.nan)
        mu = flat[0].copy()
        v = 0.0
        fwd_var[1] = v
        for t in range(1, n):
            if t > 1:
                x = flat[t - 1]
                mu_new = ((t - 1) / t) * mu + x / t
                v = ((t - 1) / t) * v + _frob(x - mu, x - mu_new) / t
                mu = mu_new
                fwd_var[t] = v
            diff = mu_all - mu
            gap[t] = (n / (n - t)) ** 2 * _frob(diff, diff)
        x = flat[n - 1]
        mu_new = ((n - 1) / n) * mu + x / n
        fwd_var[n] = ((n - 1) / n) * v + _frob(x - mu, x - mu_new) / n
        forward_mean = backward_mean = None

    fwd_var[0] = np.nan
    np.maximum(fwd_var, 0.0, out=fwd_var, where=~np.isnan(fwd_var))
    np.maximum(backward_var, 0.0, out=backward_var, where=~np.isnan(backward_var))
    forward_var_c = fwd_var + gap
    backward_var_c = backward_var + gap
    mean_sq_norm = float(np.einsum("ij,ij->", flat, flat) / n)
    return SegmentStats(
        n=n,
        forward_var=fwd_var,
        backward_var=backward_var,
        forward_var_c=forward_var_c,
        backward_var_c=backward_var_c,
        mean_gap_sq=gap,
        mean_sq_norm=mean_sq_norm,
        forward_mean=forward_mean,
        backward_mean=backward_mean,
    )
