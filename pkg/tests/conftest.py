import numpy as np
import pytest


def random_symmetric(rng, dim, scale=1.0):
    a = rng.standard_normal((dim, dim)) * scale
    return (a + a.T) / 2.0


def random_spd(rng, dim, cond=None):
    """Random SPD matrix; with ``cond`` its spectrum spans exactly that condition number."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    if cond is None:
        vals = rng.uniform(0.1, 5.0, size=dim)
    else:
        vals = np.geomspace(1.0, cond, dim)
    return (q * vals) @ q.T


def random_log_sequence(rng, n, dim, shift=0.0):
    seq = rng.standard_normal((n, dim, dim))
    return (seq + seq.transpose(0, 2, 1)) / 2.0 + shift


def direct_split_stats(seq, t):
    """From-scratch segment statistics for split ``t`` (left = first t items)."""
    left, right = seq[:t], seq[t:]
    mu_l, mu_r = left.mean(axis=0), right.mean(axis=0)

    def msd(items, center):
        return float(np.mean([np.sum((x - center) ** 2) for x in items]))

    return {
        "mu_l": mu_l,
        "mu_r": mu_r,
        "v_l": msd(left, mu_l),
        "v_r": msd(right, mu_r),
        "vc_l": msd(left, mu_r),
        "vc_r": msd(right, mu_l),
    }


def direct_curve(seq, k_values):
    """Brute-force n T_n(k/n) straight from the definition."""
    n = len(seq)
    center = seq.mean(axis=0)
    d2 = np.array([np.sum((x - center) ** 2) for x in seq])
    sigma_sq = np.mean(d2**2) - np.mean(d2) ** 2
    out = []
    for k in k_values:
        s = direct_split_stats(seq, k)
        u = k / n
        term = (s["v_l"] - s["v_r"]) ** 2 + (s["vc_l"] - s["v_l"] + s["vc_r"] - s["v_r"]) ** 2
        out.append(n * u * (1 - u) / sigma_sq * term)
    return np.array(out), sigma_sq


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
