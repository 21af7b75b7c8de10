"""Frechet change-point test and binary segmentation.

The scan statistic at split ``k`` of a segment of length ``n`` is

    n T_n(u) = n u (1 - u) / sigma^2 * [ (V_L - V_R)^2 + (V_L^C - V_L + V_R^C - V_R)^2 ],
    u = k / n,

where ``V_L``/``V_R`` are the Frechet variances left/right of the split, the
``^C`` versions measure each side against the other side's mean, and
``sigma^2`` estimates the variance of the squared distances to the overall
mean. Under homogeneity its supremum over ``u in [c, 1 - c]`` converges to the
supremum of a squared standardized Brownian bridge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InputError
from .frechet import SegmentStats, as_log_sequence, incremental_segment_stats, sigma_hat_sq
from .resample import gram_matrix, resampled_sups

QUANTILE_METHODS = ("brownian_mc", "bootstrap", "permutation")
REPORT_VERSION = "1.0"

# total variance below this fraction of the mean squared norm: all items identical
DEGENERATE_REL_TOL = 1e-14
# sigma^2 is floored at this multiple of total_var^2 so piecewise-constant data stays finite
SIGMA_REL_FLOOR = 1e-14

SeedLike = Union[int, Sequence[int]]


def _floor_mul(n: int, c: float) -> int:
    # guard against n * c landing a hair below an integer
    return int(math.floor(n * c + 1e-9))


@dataclass(frozen=True)
class DetectionConfig:
    """Parameters of the change-point test.

    ``quantile_method`` picks how the rejection threshold is obtained:
    ``"permutation"`` (random reorderings of the tested segment),
    ``"bootstrap"`` (i.i.d. draws with replacement) or ``"brownian_mc"``
    (simulated limit law). The limit law ignores the finite-sample bias of
    the mean-shift term, which grows with the dimension of the log space, so
    it is only trustworthy for long segments.

    ``bootstrap_size`` defaults to the segment length and ``min_segment`` to
    ``max(floor(n c), 4)``; see :meth:`resolved_min_segment`.
    """

    alpha: float = 0.05
    c: float = 0.1
    quantile_method: str = "permutation"
    replicates: int = 1000
    bootstrap_size: Optional[int] = None
    grid_size: int = 1000
    min_segment: Optional[int] = None
    seed: int = 0
    bonferroni: bool = False

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.c < 0.5:
            raise InputError(f"c must lie in (0, 0.5), got {self.c}")
        if self.quantile_method not in QUANTILE_METHODS:
            raise InputError(
                f"quantile_method must be one of {QUANTILE_METHODS}, got {self.quantile_method!r}"
            )
        if int(self.replicates) < 100:
            raise InputError(f"replicates must be >= 100, got {self.replicates}")
        if self.bootstrap_size is not None and int(self.bootstrap_size) < 2:
            raise InputError(f"bootstrap_size must be >= 2, got {self.bootstrap_size}")
        if int(self.grid_size) < 100:
            raise InputError(f"grid_size must be >= 100, got {self.grid_size}")
        if self.min_segment is not None and int(self.min_segment) < 2:
            raise InputError(f"min_segment must be >= 2, got {self.min_segment}")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def resolved_min_segment(self, n: int) -> int:
        if self.min_segment is not None:
            return int(self.min_segment)
        return max(_floor_mul(n, self.c), 4)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "c": self.c,
            "method": self.quantile_method,
            "B": self.replicates,
            "m": self.bootstrap_size,
            "seed": self.seed,
            "grid_size": self.grid_size,
            "min_segment": self.min_segment,
            "bonferroni": self.bonferroni,
        }


@dataclass(frozen=True)
class StatisticCurve:
    """Values of ``n T_n(k / n)`` over the admissible splits ``k`` of one segment."""

    n: int
    k: np.ndarray
    values: np.ndarray
    sigma_sq: float

    @property
    def sup(self) -> float:
        return float(self.values.max())

    @property
    def argmax_k(self) -> int:
        # np.argmax returns the first maximiser: smallest k on ties
        return int(self.k[int(np.argmax(self.values))])

    @property
    def u(self) -> np.ndarray:
        return self.k / self.n

    @property
    def lower_fraction(self) -> float:
        """Left end of the admissible interval, ``k_min / n``."""
        return float(self.k[0]) / self.n


def split_grid(n: int, c: float, min_size: int = 1) -> np.ndarray:
    """Admissible splits ``lo..n-lo`` with ``lo = max(floor(n c), min_size, 1)``."""
    lo = max(_floor_mul(n, c), int(min_size), 1)
    hi = n - lo
    if hi < lo:
        raise InputError(f"segment too short: n={n} leaves no split with c={c}, min_size={min_size}")
    return np.arange(lo, hi + 1)


def statistic_curve(stats: SegmentStats, sigma_sq: float, c: float, min_size: int = 1) -> StatisticCurve:
    """Evaluate ``n T_n(k / n)`` on the admissible grid.

    A sequence whose items are all identical (total variance negligible next
    to the mean squared norm) yields an all-zero curve. Otherwise ``sigma_sq``
    is floored at ``SIGMA_REL_FLOOR * total_var**2``; this only bites when
    every item sits at the same distance from the overall mean, as with two
    alternating constants.
    """
    n = stats.n
    k = split_grid(n, c, min_size)
    if sigma_sq < 0 or not math.isfinite(sigma_sq):
        raise InputError(f"sigma_sq must be finite and >= 0, got {sigma_sq}")
    total = stats.total_var
    if total <= DEGENERATE_REL_TOL * stats.mean_sq_norm:
        return StatisticCurve(n=n, k=k, values=np.zeros(k.shape), sigma_sq=float(sigma_sq))
    sigma_eff = max(float(sigma_sq), SIGMA_REL_FLOOR * total * total)
    u = k / n
    v_l = stats.forward_var[k]
    v_r = stats.backward_var[k]
    shift = (stats.forward_var_c[k] - v_l) + (stats.backward_var_c[k] - v_r)
    values = n * u * (1.0 - u) / sigma_eff * ((v_l - v_r) ** 2 + shift**2)
    return StatisticCurve(n=n, k=k, values=values, sigma_sq=float(sigma_sq))


def _bridge_grid(c: float, grid_size: int):
    u = np.arange(grid_size + 1) / grid_size
    tol = 1e-12
    mask = (u >= c - tol) & (u <= 1 - c + tol) & (u > 0) & (u < 1)
    if not mask.any():
        raise InputError(f"no bridge grid point lies in [{c}, {1 - c}] with grid_size={grid_size}")
    return u, mask


@lru_cache(maxsize=256)
def _bridge_sup_samples(c: float, grid_size: int, replicates: int, seed: int) -> np.ndarray:
    """Sorted samples of ``sup_{u in [c, 1-c]} B(u)^2 / (u (1 - u))``."""
    u, mask = _bridge_grid(c, grid_size)
    uu = u[mask]
    weight = 1.0 / (uu * (1.0 - uu))
    rng = np.random.default_rng(seed)
    out = np.empty(replicates)
    chunk = max(1, min(replicates, 2_000_000 // grid_size))
    scale = 1.0 / math.sqrt(grid_size)
    for start in range(0, replicates, chunk):
        size = min(chunk, replicates - start)
        w = np.zeros((size, grid_size + 1))
        np.cumsum(rng.standard_normal((size, grid_size)) * scale, axis=1, out=w[:, 1:])
        bridge = w - u * w[:, -1:]
        out[start:start + size] = (bridge[:, mask] ** 2 * weight).max(axis=1)
    out.sort()
    out.setflags(write=False)
    return out


def brownian_bridge_quantile(
    alpha: float, c: float, grid_size: int = 1000, replicates: int = 1000, seed: int = 0
) -> float:
    """Monte Carlo ``(1 - alpha)`` quantile of the squared standardized bridge supremum.

    Paths are Gaussian random walks on ``grid_size + 1`` equispaced points,
    pinned to zero at ``u = 1`` by subtracting ``u * W(1)``. The supremum is
    taken over grid points in ``[c, 1 - c]``, so ``c = 0.5`` (or just below)
    leaves only ``u = 0.5`` and the law is chi-squared with one degree of
    freedom.
    """
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < c <= 0.5:
        raise InputError(f"c must lie in (0, 0.5], got {c}")
    if grid_size < 100:
        raise InputError(f"grid_size must be >= 100, got {grid_size}")
    if replicates < 1:
        raise InputError(f"replicates must be positive, got {replicates}")
    samples = _bridge_sup_samples(float(c), int(grid_size), int(replicates), int(seed))
    return float(np.quantile(samples, 1.0 - alpha))


def _replicate_streams(entropy: SeedLike, replicates: int):
    for child in np.random.SeedSequence(entropy).spawn(int(replicates)):
        yield np.random.default_rng(child)


def _resampling_quantile(seq, cfg, seed, c, gram, with_replacement: bool) -> float:
    seq = as_log_sequence(seq, min_length=2)
    n = seq.shape[0]
    if with_replacement:
        m = int(cfg.bootstrap_size) if cfg.bootstrap_size is not None else n
    else:
        m = n
    c = cfg.c if c is None else c
    k = split_grid(m, c)
    if gram is None:
        gram = gram_matrix(seq)
    elif gram.shape != (n, n):
        raise InputError(f"gram has shape {gram.shape}, expected {(n, n)}")
    entropy = cfg.seed if seed is None else seed
    if with_replacement:
        index_sets = np.stack([rng.integers(0, n, size=m) for rng in _replicate_streams(entropy, cfg.replicates)])
    else:
        index_sets = np.stack([rng.permutation(n) for rng in _replicate_streams(entropy, cfg.replicates)])
    sups = resampled_sups(gram, index_sets, k, DEGENERATE_REL_TOL, SIGMA_REL_FLOOR)
    return float(np.quantile(sups, 1.0 - cfg.alpha))


def bootstrap_quantile(
    seq, cfg: DetectionConfig, seed: Optional[SeedLike] = None, c: Optional[float] = None, gram=None
) -> float:
    """Bootstrap ``(1 - alpha)`` quantile of the sup statistic under the null.

    Each replicate draws ``m`` items uniformly with replacement from the
    pooled sequence, keeps them in draw order, and recomputes the sup of
    ``m T_m(u)`` over ``[c, 1 - c]``. Replicate ``b`` uses its own stream
    spawned from ``seed`` (default ``cfg.seed``), so the result is
    reproducible and independent of evaluation order.

    Parameters
    ----------
    seq : (n, N, N) array_like
        Log sequence.
    cfg : DetectionConfig
        Supplies ``alpha``, ``replicates``, ``bootstrap_size`` (default ``n``).
    seed : int or sequence of int, optional
        Entropy for the replicate streams.
    c : float, optional
        Relative margin for the replicate grids; defaults to ``cfg.c``.
    gram : (n, n) array, optional
        Precomputed :func:`gram_matrix` of ``seq``.

    Notes
    -----
    Draws with replacement put exact ties in every replicate. In high
    dimension those ties are far closer than any two distinct items, which
    inflates the replicate statistics; :func:`permutation_quantile` avoids
    this.
    """
    return _resampling_quantile(seq, cfg, seed, c, gram, with_replacement=True)


def permutation_quantile(
    seq, cfg: DetectionConfig, seed: Optional[SeedLike] = None, c: Optional[float] = None, gram=None
) -> float:
    """Permutation ``(1 - alpha)`` quantile of the sup statistic.

    Same as :func:`bootstrap_quantile` but each replicate is a random
    reordering of all ``n`` items, so the test is exact for exchangeable
    data. ``cfg.bootstrap_size`` is ignored.
    """
    return _resampling_quantile(seq, cfg, seed, c, gram, with_replacement=False)


@dataclass(frozen=True)
class ChangePoint:
    """A rejected test: change at global index ``index`` inside segment ``[lo, hi)``.

    ``index`` is the first item of the new regime.
    """

    index: int
    tau: float
    stat: float
    threshold: float
    segment: tuple

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "tau": self.tau,
            "stat": self.stat,
            "threshold": self.threshold,
            "segment": list(self.segment),
        }


@dataclass(frozen=True)
class SegmentTest:
    """Outcome of one single-change-point test on ``[lo, hi)``."""

    lo: int
    hi: int
    curve: StatisticCurve
    threshold: float
    alpha: float

    @property
    def rejected(self) -> bool:
        return self.curve.sup > self.threshold

    @property
    def index(self) -> int:
        return self.lo + self.curve.argmax_k


@dataclass
class ChangePointReport:
    """Detected change points plus the curve of every tested segment."""

    n: int
    change_points: list
    config: dict
    tests: list = field(default_factory=list)

    @property
    def indices(self) -> list:
        return [cp.index for cp in self.change_points]

    def to_dict(self, extra_config: Optional[dict] = None, include_curves: bool = True) -> dict:
        config = dict(self.config)
        if extra_config:
            config.update(extra_config)
        doc = {
            "version": REPORT_VERSION,
            "n": self.n,
            "config": config,
            "change_points": [cp.to_dict() for cp in self.change_points],
        }
        if include_curves:
            doc["curves"] = [
                {
                    "segment": [t.lo, t.hi],
                    "k": [int(t.lo + k) for k in t.curve.k],
                    "nT": [float(v) for v in t.curve.values],
                    "threshold": t.threshold,
                    "sigma_sq": t.curve.sigma_sq,
                }
                for t in self.tests
            ]
        return doc


def _quantile(seq, cfg: DetectionConfig, alpha: float, c_eff: float, seed, gram=None) -> float:
    if cfg.quantile_method == "brownian_mc":
        return brownian_bridge_quantile(alpha, c_eff, cfg.grid_size, cfg.replicates, cfg.seed)
    level_cfg = replace(cfg, alpha=alpha)
    if cfg.quantile_method == "bootstrap":
        return bootstrap_quantile(seq, level_cfg, seed=seed, c=c_eff, gram=gram)
    return permutation_quantile(seq, level_cfg, seed=seed, c=c_eff, gram=gram)


def run_segment_test(
    seq, cfg: DetectionConfig, min_size: int = 1, alpha: Optional[float] = None, lo: int = 0, gram=None
) -> SegmentTest:
    """Run the single-change-point test on a whole (sub)sequence.

    The quantile is computed for the interval actually scanned, which is
    wider than ``[c, 1 - c]`` only when ``min_size`` exceeds ``floor(n c)``.
    """
    seq = as_log_sequence(seq, min_length=2)
    n = seq.shape[0]
    alpha = cfg.alpha if alpha is None else alpha
    stats = incremental_segment_stats(seq)
    curve = statistic_curve(stats, sigma_hat_sq(seq), cfg.c, min_size)
    c_eff = max(cfg.c, curve.lower_fraction)
    threshold = _quantile(seq, cfg, alpha, c_eff, seed=(int(cfg.seed), lo, lo + n), gram=gram)
    return SegmentTest(lo=lo, hi=lo + n, curve=curve, threshold=threshold, alpha=alpha)


def detect_single(seq, cfg: DetectionConfig, min_size: int = 1) -> Optional[ChangePoint]:
    """Single change-point test; the argmax split if the sup exceeds the quantile."""
    result = run_segment_test(seq, cfg, min_size=min_size)
    if not result.rejected:
        return None
    return ChangePoint(
        index=result.index,
        tau=result.index / result.curve.n,
        stat=result.curve.sup,
        threshold=result.threshold,
        segment=(0, result.curve.n),
    )


def binary_segmentation(seq, cfg: DetectionConfig) -> ChangePointReport:
    """Recursive single-change-point testing, depth first, left half first.

    A segment is tested only if it holds at least ``2 * min_segment`` items,
    and splits closer than ``min_segment`` to either end are never scanned,
    so every final segment has at least ``min_segment`` items. The relative
    margin ``c`` applies to each segment's own length. With
    ``cfg.bonferroni`` the ``j``-th test runs at level ``alpha / j``.
    """
    seq = as_log_sequence(seq, min_length=2)
    n = seq.shape[0]
    min_seg = cfg.resolved_min_segment(n)
    if n < 2 * min_seg:
        raise InputError(f"sequence of length {n} is shorter than 2 * min_segment = {2 * min_seg}")

    gram = gram_matrix(seq) if cfg.quantile_method != "brownian_mc" else None
    found = []
    tests = []
    stack = [(0, n)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2 * min_seg:
            continue
        alpha = cfg.alpha / (len(tests) + 1) if cfg.bonferroni else cfg.alpha
        result = run_segment_test(
            seq[lo:hi],
            cfg,
            min_size=min_seg,
            alpha=alpha,
            lo=lo,
            gram=None if gram is None else gram[lo:hi, lo:hi],
        )
        tests.append(result)
        if result.rejected:
            k = result.index
            found.append(
                ChangePoint(
                    index=k,
                    tau=k / n,
                    stat=result.curve.sup,
                    threshold=result.threshold,
                    segment=(lo, hi),
                )
            )
            stack.append((k, hi))
            stack.append((lo, k))
    found.sort(key=lambda cp: cp.index)
    config = cfg.to_dict()
    config["min_segment"] = min_seg
    return ChangePointReport(n=n, change_points=found, config=config, tests=tests)
