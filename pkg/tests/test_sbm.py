import numpy as np
import pytest

from frechet_cpd import InputError, SbmRegime, Scenario, generate_scenario, sample_snapshot
from frechet_cpd.sbm import block_labels


def test_block_diagonal_degenerate():
    regime = SbmRegime(2, np.eye(2), duration=1)
    a = sample_snapshot(regime, 4, np.random.default_rng(0)).dense()
    expected = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], float)
    np.testing.assert_array_equal(a, expected)


def test_zero_affinity_empty():
    regime = SbmRegime(3, np.zeros((3, 3)), duration=1)
    assert not sample_snapshot(regime, 12, np.random.default_rng(0)).dense().any()


def test_within_block_density():
    regime = SbmRegime.planted(2, 1, p_in=0.5, p_out=0.05)
    labels = block_labels(50, 2)
    same = (labels[:, None] == labels[None, :]) & ~np.eye(50, dtype=bool)
    pairs = same.sum() // 2 * 100
    edges = 0
    for seed in range(100):
        a = sample_snapshot(regime, 50, np.random.default_rng(seed)).dense()
        assert np.array_equal(a, a.T) and not np.diag(a).any()
        edges += (a[same] > 0).sum() // 2
    sd = np.sqrt(pairs * 0.25)
    assert abs(edges - 0.5 * pairs) <= 3 * sd


def test_expected_edge_count():
    regime = SbmRegime.planted(4, 1, p_in=0.4, p_out=0.1)
    labels = block_labels(30, 4)
    iu = np.triu_indices(30, 1)
    p = regime.affinity[labels[iu[0]], labels[iu[1]]]
    mean, var = 100 * p.sum(), 100 * (p * (1 - p)).sum()
    total = sum(
        np.count_nonzero(np.triu(sample_snapshot(regime, 30, np.random.default_rng(s)).dense(), 1))
        for s in range(100)
    )
    assert abs(total - mean) <= 4 * np.sqrt(var)


def test_uniform_weights():
    regime = SbmRegime.planted(1, 1, p_in=1.0, weight_law=("uniform", 2.0, 3.0))
    a = sample_snapshot(regime, 10, np.random.default_rng(1)).dense()
    off = a[~np.eye(10, dtype=bool)]
    assert off.min() >= 2.0 and off.max() <= 3.0


def test_remainder_blocks():
    assert np.bincount(block_labels(11, 3)).tolist() == [4, 4, 3]
    assert np.bincount(block_labels(50, 4)).tolist() == [13, 13, 12, 12]


def test_ground_truth():
    scn = Scenario(20, (SbmRegime.planted(2, 60), SbmRegime.planted(4, 60)))
    net, truth = generate_scenario(scn)
    assert truth == [60] and net.n == 120 and net.node_count == 20
    _, truth = generate_scenario(Scenario(20, (SbmRegime.planted(2, 5),)))
    assert truth == []


def test_seed_determinism():
    scn = Scenario(15, (SbmRegime.planted(3, 4), SbmRegime.planted(2, 3)), seed=5)
    a, _ = generate_scenario(scn)
    b, _ = generate_scenario(scn)
    c, _ = generate_scenario(scn, seed=6)
    np.testing.assert_array_equal(a.adjacency_stack(), b.adjacency_stack())
    assert not np.array_equal(a.adjacency_stack(), c.adjacency_stack())


def test_config_roundtrip():
    raw = {
        "node_count": 12,
        "seed": 3,
        "regimes": [
            {"num_blocks": 2, "duration": 5},
            {"num_blocks": 3, "duration": 4, "p_in": 0.7, "weight_law": {"uniform": [1, 2]}},
        ],
    }
    scn = Scenario.from_dict(raw)
    assert scn.length == 9
    assert Scenario.from_dict(scn.to_dict()).to_dict() == scn.to_dict()
    assert scn.regimes[1].weight_law == ("uniform", 1.0, 2.0)


@pytest.mark.parametrize(
    "bad",
    [
        {"num_blocks": 2, "affinity": [[0.5, 0.1], [0.2, 0.5]], "duration": 3},
        {"num_blocks": 2, "affinity": [[1.5, 0], [0, 1]], "duration": 3},
        {"num_blocks": 2, "duration": 0},
        {"num_blocks": 2, "duration": 3, "weight_law": "gamma"},
        {"duration": 3},
    ],
)
def test_invalid_regimes(bad):
    with pytest.raises(InputError):
        SbmRegime.from_dict(bad)


def test_too_many_blocks():
    with pytest.raises(InputError):
        Scenario(3, (SbmRegime.planted(4, 2),))
