"""SPD kernel: nearest-SPD projection, symmetric matrix log/exp, Log-Euclidean distance.

Every routine goes through the symmetric eigensolver (``numpy.linalg.eigh``)
after averaging the input with its transpose, so round-off asymmetry never
reaches the spectrum.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError, NumericalError
from .graph import laplacian

DEFAULT_RELATIVE_FLOOR = 1e-8
_EXP_LIMIT = np.log(np.finfo(float).max)


def _symmetric_part(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError("matrix has non-finite entries")
    return (m + m.T) / 2.0


def _eigh(s: np.ndarray, context: str = ""):
    try:
        return np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:
        where = f" ({context})" if context else ""
        raise NumericalError(f"symmetric eigendecomposition failed{where}: {exc}") from exc


def _reassemble(vecs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    out = (vecs * vals) @ vecs.T
    return (out + out.T) / 2.0


def default_floor(m, relative: float = DEFAULT_RELATIVE_FLOOR) -> float:
    """Eigenvalue floor ``relative * max(1, trace(M) / N)``.

    Scaling with the mean degree keeps padding-induced zero eigenvalues at a
    fixed distance below the rest of the spectrum.
    """
    m = np.asarray(m, dtype=float)
    if relative <= 0:
        raise InputError(f"relative floor must be positive, got {relative}")
    return relative * max(1.0, float(np.trace(m)) / m.shape[0])


def nearest_spd(m, eps: float) -> np.ndarray:
    """Frobenius-nearest symmetric matrix with all eigenvalues >= ``eps``.

    Takes the symmetric part ``(M + M.T) / 2`` and clamps its spectrum from
    below at ``eps``.

    Parameters
    ----------
    m : (N, N) array_like
        Any finite square matrix; need not be symmetric.
    eps : float
        Strictly positive eigenvalue floor.

    Returns
    -------
    numpy.ndarray
        Symmetric positive definite ``(N, N)`` matrix.
    """
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps}")
    s = _symmetric_part(m)
    vals, vecs = _eigh(s, "nearest_spd")
    if vals[0] >= eps:
        return s
    return _reassemble(vecs, np.maximum(vals, eps))


def matrix_log(x, context: str = "") -> np.ndarray:
    """Principal logarithm of an SPD matrix, ``U diag(log w) U.T``."""
    s = _symmetric_part(x)
    vals, vecs = _eigh(s, context or "matrix_log")
    if vals[0] <= 0:
        where = f" ({context})" if context else ""
        raise NumericalError(
            f"matrix_log needs a positive definite matrix{where}; smallest eigenvalue {vals[0]:.3e}"
        )
    return _reassemble(vecs, np.log(vals))


def matrix_exp(s) -> np.ndarray:
    """Exponential of a symmetric matrix, ``U diag(exp w) U.T``; always SPD."""
    s = _symmetric_part(s)
    vals, vecs = _eigh(s, "matrix_exp")
    if vals[-1] >= _EXP_LIMIT:
        raise NumericalError(f"matrix_exp overflows: largest eigenvalue {vals[-1]:.3e}")
    return _reassemble(vecs, np.exp(vals))


def log_euclidean_distance(log_x, log_y) -> float:
    """Log-Euclidean distance between two SPD matrices given by their logarithms.

    This is just ``||log_x - log_y||_F``; callers pass already-logged inputs.
    """
    log_x = np.asarray(log_x, dtype=float)
    log_y = np.asarray(log_y, dtype=float)
    if log_x.shape != log_y.shape:
        raise InputError(f"dimension mismatch: {log_x.shape} vs {log_y.shape}")
    return float(np.linalg.norm(log_x - log_y))


def log_laplacians(network, epsilon=None, relative: float = DEFAULT_RELATIVE_FLOOR, out=None):
    """Log of the nearest-SPD Laplacian for every snapshot of ``network``.

    Parameters
    ----------
    network : DynamicNetwork or iterable of adjacency matrices
    epsilon : float, optional
        Absolute eigenvalue floor. When omitted each snapshot gets
        :func:`default_floor` of its own Laplacian with ``relative``.
    relative : float
        Relative floor factor used when ``epsilon`` is None.
    out : array, optional
        Preallocated ``(n, N, N)`` float array (e.g. a ``numpy.memmap``) to
        fill; useful when the stack does not fit in memory.

    Returns
    -------
    numpy.ndarray
        ``(n, N, N)`` stack of symmetric log-Laplacians.
    """
    snapshots = network.snapshots if hasattr(network, "snapshots") else list(network)
    if not snapshots:
        raise InputError("no snapshots")
    n = len(snapshots)
    first = laplacian(snapshots[0])
    dim = first.shape[0]
    if out is None:
        out = np.empty((n, dim, dim))
    elif out.shape != (n, dim, dim):
        raise InputError(f"out has shape {out.shape}, expected {(n, dim, dim)}")
    for t, snap in enumerate(snapshots):
        lap = first if t == 0 else laplacian(snap)
        eps = epsilon if epsilon is not None else default_floor(lap, relative)
        out[t] = log_nearest_spd(lap, eps, context=f"snapshot {t}")
    return out


def log_nearest_spd(m, eps: float, context: str = "") -> np.ndarray:
    """``matrix_log(nearest_spd(m, eps))`` with a single eigendecomposition."""
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps}")
    vals, vecs = _eigh(_symmetric_part(m), context or "log_nearest_spd")
    return _reassemble(vecs, np.log(np.maximum(vals, eps)))
