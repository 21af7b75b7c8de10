"""Stochastic block model sequences with planted change points."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InputError
from .graph import DynamicNetwork, GraphSnapshot

DEFAULT_NODE_COUNT = 50
DEFAULT_P_IN = 0.5
DEFAULT_P_OUT = 0.05


def planted_affinity(num_blocks: int, p_in: float = DEFAULT_P_IN, p_out: float = DEFAULT_P_OUT) -> np.ndarray:
    """Affinity matrix with ``p_in`` on the diagonal and ``p_out`` elsewhere."""
    a = np.full((num_blocks, num_blocks), float(p_out))
    np.fill_diagonal(a, float(p_in))
    return a


@dataclass(frozen=True)
class SbmRegime:
    """A stretch of ``duration`` snapshots drawn from one block model.

    ``weight_law`` is ``"unit"`` or ``("uniform", lo, hi)``.
    """

    num_blocks: int
    affinity: np.ndarray
    duration: int
    weight_law: Union[str, tuple] = "unit"

    def __post_init__(self):
        a = np.array(self.affinity, dtype=float)
        if int(self.num_blocks) < 1:
            raise InputError(f"num_blocks must be positive, got {self.num_blocks}")
        if a.shape != (self.num_blocks, self.num_blocks):
            raise InputError(f"affinity must be {self.num_blocks}x{self.num_blocks}, got {a.shape}")
        if not np.array_equal(a, a.T):
            raise InputError("affinity must be symmetric")
        if np.any(a < 0) or np.any(a > 1) or not np.all(np.isfinite(a)):
            raise InputError("affinity entries must be probabilities in [0, 1]")
        if int(self.duration) < 1:
            raise InputError(f"duration must be >= 1, got {self.duration}")
        law = self.weight_law
        if isinstance(law, list):
            law = tuple(law)
        if law != "unit":
            if not (isinstance(law, tuple) and len(law) == 3 and law[0] == "uniform"):
                raise InputError(f"weight_law must be 'unit' or ('uniform', lo, hi), got {law!r}")
            lo, hi = float(law[1]), float(law[2])
            if not 0 <= lo <= hi:
                raise InputError(f"uniform weight bounds need 0 <= lo <= hi, got {lo}, {hi}")
            law = ("uniform", lo, hi)
        a.setflags(write=False)
        object.__setattr__(self, "affinity", a)
        object.__setattr__(self, "weight_law", law)

    @classmethod
    def planted(cls, num_blocks: int, duration: int, p_in=DEFAULT_P_IN, p_out=DEFAULT_P_OUT, weight_law="unit"):
        return cls(num_blocks, planted_affinity(num_blocks, p_in, p_out), duration, weight_law)

    @classmethod
    def from_dict(cls, d: dict) -> "SbmRegime":
        """Build from a config mapping.

        Either ``affinity`` or ``p_in``/``p_out`` must be given; ``weight_law``
        is ``"unit"`` or ``{"uniform": [lo, hi]}``.
        """
        try:
            k = int(d["num_blocks"])
            duration = int(d["duration"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"regime needs integer num_blocks and duration: {exc}") from None
        if "affinity" in d:
            affinity = d["affinity"]
        else:
            affinity = planted_affinity(k, d.get("p_in", DEFAULT_P_IN), d.get("p_out", DEFAULT_P_OUT))
        law = d.get("weight_law", "unit")
        if isinstance(law, dict):
            if set(law) != {"uniform"}:
                raise InputError(f"unknown weight_law {law!r}")
            lo, hi = law["uniform"]
            law = ("uniform", lo, hi)
        return cls(k, affinity, duration, law)

    def to_dict(self) -> dict:
        law = self.weight_law if self.weight_law == "unit" else {"uniform": list(self.weight_law[1:])}
        return {
            "num_blocks": self.num_blocks,
            "affinity": self.affinity.tolist(),
            "duration": self.duration,
            "weight_law": law,
        }


@dataclass(frozen=True)
class Scenario:
    node_count: int
    regimes: tuple
    seed: int = 0

    def __post_init__(self):
        regimes = tuple(self.regimes)
        if not regimes:
            raise InputError("a scenario needs at least one regime")
        if int(self.node_count) < 1:
            raise InputError(f"node_count must be positive, got {self.node_count}")
        for r in regimes:
            if r.num_blocks > self.node_count:
                raise InputError(f"{r.num_blocks} blocks cannot be formed from {self.node_count} nodes")
        object.__setattr__(self, "regimes", regimes)

    @property
    def length(self) -> int:
        return sum(r.duration for r in self.regimes)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict) or "regimes" not in d:
            raise InputError("scenario config needs a 'regimes' list")
        regimes = d["regimes"]
        if not isinstance(regimes, list):
            raise InputError("'regimes' must be a list")
        return cls(
            node_count=int(d.get("node_count", DEFAULT_NODE_COUNT)),
            regimes=tuple(SbmRegime.from_dict(r) for r in regimes),
            seed=int(d.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "seed": self.seed,
            "regimes": [r.to_dict() for r in self.regimes],
        }


def block_labels(node_count: int, num_blocks: int) -> np.ndarray:
    """Contiguous equal blocks; the first ``node_count % num_blocks`` blocks get one extra node."""
    base, extra = divmod(node_count, num_blocks)
    sizes = [base + (1 if b < extra else 0) for b in range(num_blocks)]
    return np.repeat(np.arange(num_blocks), sizes)


def sample_snapshot(regime: SbmRegime, node_count: int, rng, index: int = 0) -> GraphSnapshot:
    """Draw one undirected weighted graph from ``regime`` (no self-loops)."""
    labels = block_labels(node_count, regime.num_blocks)
    probs = regime.affinity[labels[:, None], labels[None, :]]
    iu, ju = np.triu_indices(node_count, k=1)
    present = rng.random(iu.size) < probs[iu, ju]
    if regime.weight_law == "unit":
        w = np.ones(int(present.sum()))
    else:
        _, lo, hi = regime.weight_law
        w = rng.uniform(lo, hi, size=int(present.sum()))
    a = np.zeros((node_count, node_count))
    a[iu[present], ju[present]] = w
    a = a + a.T
    return GraphSnapshot(index, a)


def generate_scenario(scn: Scenario, seed: Optional[int] = None):
    """Concatenate snapshots from each regime.

    Snapshot ``t`` is drawn from its own stream seeded by ``(seed, t)``.

    Returns
    -------
    network : DynamicNetwork
    ground_truth : list of int
        Index of the first snapshot of every regime after the first.
    """
    seed = scn.seed if seed is None else seed
    snapshots = []
    truth = []
    t = 0
    for r_idx, regime in enumerate(scn.regimes):
        if r_idx:
            truth.append(t)
        for _ in range(regime.duration):
            rng = np.random.default_rng([int(seed), t])
            snapshots.append(sample_snapshot(regime, scn.node_count, rng, index=t))
            t += 1
    labels = tuple(str(i) for i in range(scn.node_count))
    return DynamicNetwork(tuple(snapshots), labels), truth
