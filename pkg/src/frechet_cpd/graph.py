"""Graph snapshots, edge-stream aggregation and graph Laplacians."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable, Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import InputError

Timestamp = Union[int, float, datetime]
Window = Union[int, float, timedelta, str]

DIRECTED_POLICIES = ("symmetrize", "reject", "undirected")
WEIGHT_TRANSFORMS = {
    "identity": None,
    "log1p": np.log1p,
}

_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([smhdw])\s*$", re.IGNORECASE)
_DURATION_UNITS = {"s": "seconds", "m": "minutes", "h": "hours", "d": "days", "w": "weeks"}


@dataclass(frozen=True)
class EdgeEvent:
    """One timestamped interaction ``src -> dst`` with a nonnegative weight."""

    timestamp: Timestamp
    src: str
    dst: str
    weight: float = 1.0

    def __post_init__(self):
        if not str(self.src) or not str(self.dst):
            raise InputError("edge endpoints must be nonempty")
        w = float(self.weight)
        if not math.isfinite(w) or w < 0:
            raise InputError(f"edge weight must be finite and >= 0, got {self.weight!r}")


@dataclass(frozen=True)
class GraphSnapshot:
    """Weighted undirected graph observed at time index ``index``.

    The adjacency matrix is stored read-only.
    """

    index: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = self.adjacency
        if sp.issparse(a):
            a = sp.csr_matrix(a, dtype=float)
            a.sum_duplicates()
            values = a.data
        else:
            a = np.array(a, dtype=float)
            values = a
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InputError(f"adjacency must be a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(values)):
            raise InputError("adjacency has non-finite entries")
        if np.any(values < 0):
            raise InputError("adjacency has negative entries")
        if sp.issparse(a):
            if (a != a.T).nnz:
                raise InputError(f"adjacency of snapshot {self.index} is not symmetric")
            a.data.setflags(write=False)
        else:
            if not np.array_equal(a, a.T):
                raise InputError(f"adjacency of snapshot {self.index} is not symmetric")
            a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    def dense(self) -> np.ndarray:
        a = self.adjacency
        return a.toarray() if sp.issparse(a) else a

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class DynamicNetwork:
    """Time-ordered snapshots over one shared, ordered vertex set."""

    snapshots: tuple
    node_labels: tuple

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        labels = tuple(str(x) for x in self.node_labels)
        if not snaps:
            raise InputError("a dynamic network needs at least one snapshot")
        for t, s in enumerate(snaps):
            if s.index != t:
                raise InputError(f"snapshot indices must be 0..n-1, found {s.index} at position {t}")
            if s.node_count != len(labels):
                raise InputError(
                    f"snapshot {t} has {s.node_count} nodes, expected {len(labels)}"
                )
        object.__setattr__(self, "snapshots", snaps)
        object.__setattr__(self, "node_labels", labels)

    @classmethod
    def from_adjacency(cls, matrices: Iterable[np.ndarray], node_labels=None) -> "DynamicNetwork":
        snaps = tuple(GraphSnapshot(t, a) for t, a in enumerate(matrices))
        if node_labels is None:
            node_labels = [str(i) for i in range(snaps[0].node_count if snaps else 0)]
        return cls(snaps, tuple(node_labels))

    @property
    def n(self) -> int:
        return len(self.snapshots)

    @property
    def node_count(self) -> int:
        return len(self.node_labels)

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, t):
        return self.snapshots[t]

    def adjacency_stack(self) -> np.ndarray:
        return np.stack([s.dense() for s in self.snapshots])


def parse_window(window: Window) -> Union[int, float, timedelta]:
    """Turn ``"1d"``, ``"2w"``, ``"12h"`` ... into a ``timedelta``; numbers pass through.

    A bare numeric string is read as an integer (or float) bucket width.
    """
    if isinstance(window, timedelta):
        width = window
        if width <= timedelta(0):
            raise InputError(f"window must be positive, got {window!r}")
        return width
    if isinstance(window, str):
        text = window.strip()
        try:
            window = int(text)
        except ValueError:
            try:
                window = float(text)
            except ValueError:
                m = _DURATION_RE.match(text)
                if not m:
                    raise InputError(
                        f"cannot parse window {text!r}; use an integer or a duration like 1d, 1w, 6h"
                    ) from None
                width = timedelta(**{_DURATION_UNITS[m.group(2).lower()]: float(m.group(1))})
                if width <= timedelta(0):
                    raise InputError(f"window must be positive, got {text!r}")
                return width
    if isinstance(window, bool) or not isinstance(window, (int, float)):
        raise InputError(f"unsupported window type {type(window).__name__}")
    if not window > 0 or not math.isfinite(window):
        raise InputError(f"window must be positive, got {window!r}")
    return window


def _bucket_indices(timestamps: Sequence[Timestamp], width) -> list:
    is_dt = [isinstance(t, datetime) for t in timestamps]
    if any(is_dt):
        if not all(is_dt):
            raise InputError("cannot mix datetime and numeric timestamps")
        if not isinstance(width, timedelta):
            raise InputError("datetime timestamps need a duration window such as 1d or 1w")
        aware = {t.tzinfo is not None and t.utcoffset() is not None for t in timestamps}
        if len(aware) > 1:
            raise InputError("cannot mix timezone-aware and naive timestamps")
        t0 = min(timestamps)
        # timedelta // timedelta is exact integer floor division
        return [(t - t0) // width for t in timestamps]
    if isinstance(width, timedelta):
        raise InputError("numeric timestamps need a numeric window")
    t0 = min(timestamps)
    return [int(math.floor((t - t0) / width)) for t in timestamps]


def aggregate_edge_stream(
    events: Sequence[EdgeEvent],
    window: Window,
    directed_policy: str = "symmetrize",
    weight_transform: Union[str, Callable, None] = "identity",
) -> DynamicNetwork:
    """Bucket an edge stream into a uniform grid of graph snapshots.

    Parameters
    ----------
    events : sequence of EdgeEvent
        Raw interactions. The node set is the union of all endpoints, ordered
        by first appearance in ``events``.
    window : int, float, timedelta or str
        Bucket width. Bucket of an event is ``floor((t - t_min) / window)``;
        one snapshot is emitted per bucket between the first and last
        event, empty buckets included.
    directed_policy : {"symmetrize", "reject", "undirected"}
        ``symmetrize`` replaces the raw directed adjacency by ``(A + A.T) / 2``.
        ``reject`` raises if any bucket's raw adjacency is asymmetric.
        ``undirected`` counts every event in both directions.
    weight_transform : {"identity", "log1p"} or callable
        Applied elementwise to each snapshot's summed weights, before
        symmetrization.

    Returns
    -------
    DynamicNetwork
    """
    events = list(events)
    if not events:
        raise InputError("no events")
    if directed_policy not in DIRECTED_POLICIES:
        raise InputError(f"directed_policy must be one of {DIRECTED_POLICIES}, got {directed_policy!r}")
    if callable(weight_transform):
        transform = weight_transform
    else:
        try:
            transform = WEIGHT_TRANSFORMS[weight_transform or "identity"]
        except KeyError:
            raise InputError(
                f"weight_transform must be one of {sorted(WEIGHT_TRANSFORMS)}, got {weight_transform!r}"
            ) from None
    width = parse_window(window)

    index: dict = {}
    for ev in events:
        for node in (str(ev.src), str(ev.dst)):
            if node not in index:
                index[node] = len(index)
    n_nodes = len(index)

    buckets = _bucket_indices([ev.timestamp for ev in events], width)
    n_buckets = max(buckets) + 1
    rows = np.fromiter((index[str(ev.src)] for ev in events), dtype=np.intp, count=len(events))
    cols = np.fromiter((index[str(ev.dst)] for ev in events), dtype=np.intp, count=len(events))
    weights = np.fromiter((float(ev.weight) for ev in events), dtype=float, count=len(events))
    if np.any(weights < 0):
        raise InputError("negative edge weight")
    bucket_arr = np.asarray(buckets, dtype=np.intp)

    order = np.argsort(bucket_arr, kind="stable")
    bounds = np.searchsorted(bucket_arr[order], np.arange(n_buckets + 1))
    labels = list(index)
    snapshots = []
    for t in range(n_buckets):
        sel = order[bounds[t]:bounds[t + 1]]
        a = sp.coo_matrix(
            (weights[sel], (rows[sel], cols[sel])), shape=(n_nodes, n_nodes)
        ).tocsr()
        a.sum_duplicates()
        if transform is not None:
            # applied to stored entries only; absent pairs stay 0
            a.data = np.asarray(transform(a.data), dtype=float)
        if directed_policy == "symmetrize":
            a = (a + a.T) / 2.0
        elif directed_policy == "undirected":
            a = a + a.T - sp.diags(a.diagonal())
        elif (a != a.T).nnz:
            i, j = np.argwhere((a != a.T).toarray())[0]
            raise InputError(
                f"directed edge {labels[i]} -> {labels[j]} in bucket {t} rejected by policy 'reject'"
            )
        a = sp.csr_matrix(a)
        a.eliminate_zeros()
        snapshots.append(GraphSnapshot(t, a))
    return DynamicNetwork(tuple(snapshots), tuple(index))


def laplacian(snapshot) -> np.ndarray:
    """Combinatorial Laplacian ``D - A`` of a snapshot (or a bare adjacency matrix).

    Self-loops enter both the degree and the adjacency diagonal, so every row
    still sums to zero.
    """
    if isinstance(snapshot, GraphSnapshot):
        a = snapshot.dense()
    elif sp.issparse(snapshot):
        a = snapshot.toarray()
    else:
        a = np.asarray(snapshot, dtype=float)
    lap = -np.array(a, dtype=float)
    # degree computed from off-diagonal entries only so the diagonal is exact
    off = a.sum(axis=1) - np.diag(a)
    lap[np.diag_indices_from(lap)] = off
    return lap
