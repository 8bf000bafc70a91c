"""
Test per l'algebra delle distribuzioni di latenza
"""

import math

import numpy as np
import pytest

from latency_dist import (CiInterval, LatencyPmf, NormalSpec, central_ci, ci_disjoint,
                          convolve, convolve_chain, pmf_from_normal, prob_on_time, quantile,
                          sample, sample_many, shift)
from sim_errors import (IncompatibleDistributionsError, InvalidComparisonError,
                        InvalidParameterError)


def test_pmf_from_normal_bounds_and_mass():
    d = pmf_from_normal(NormalSpec(100.0, 10.0))
    assert math.isclose(float(d.mass.sum()), 1.0, abs_tol=1e-9)
    assert d.origin >= 60.0 - 1.0
    assert d.support_max <= 140.0 + 1.0
    assert abs(d.mean - 100.0) < 0.05


def test_pmf_from_normal_truncates_at_zero():
    d = pmf_from_normal(NormalSpec(5.0, 10.0))
    assert d.origin >= 0.0
    assert math.isclose(float(d.mass.sum()), 1.0, abs_tol=1e-9)


def test_zero_sigma_is_point_mass():
    d = pmf_from_normal(NormalSpec(42.0, 0.0))
    assert d.size == 1
    assert d.origin == 42.0


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        NormalSpec(0.0, 1.0)
    with pytest.raises(InvalidParameterError):
        NormalSpec(10.0, -1.0)
    with pytest.raises(InvalidParameterError):
        pmf_from_normal(NormalSpec(10.0, 1.0), bin_width=0.0)
    with pytest.raises(InvalidParameterError):
        LatencyPmf(1.0, 0.0, [0.5, 0.4])
    with pytest.raises(InvalidParameterError):
        convolve_chain([])


def test_mass_array_is_read_only():
    d = LatencyPmf(1.0, 0.0, [0.25, 0.75])
    with pytest.raises(ValueError):
        d.mass[0] = 1.0


def test_convolve_point_masses():
    c = convolve(LatencyPmf.point(3.0), LatencyPmf.point(4.0))
    assert c.size == 1
    assert c.origin == 7.0


def test_convolve_small_mapping():
    a = LatencyPmf.from_mapping({1.0: 0.5, 2.0: 0.5})
    c = convolve(a, a)
    assert c.origin == 2.0
    assert np.allclose(c.mass, [0.25, 0.5, 0.25])
    assert math.isclose(c.mean, 3.0)


def test_convolve_rejects_different_widths():
    with pytest.raises(IncompatibleDistributionsError):
        convolve(LatencyPmf.point(2.0, 1.0), LatencyPmf.point(2.0, 2.0))


def test_convolve_matches_monte_carlo():
    """Convoluzione contro l'istogramma Monte-Carlo della somma arrotondata al bin"""
    rng = np.random.default_rng(2024)
    for _ in range(4):
        mu = rng.uniform(200.0, 500.0, size=2)
        sigma = rng.uniform(5.0, 40.0, size=2)
        a = pmf_from_normal(NormalSpec(mu[0], sigma[0]))
        b = pmf_from_normal(NormalSpec(mu[1], sigma[1]))
        c = convolve(a, b)

        total = np.rint(rng.normal(mu[0], sigma[0], 1_000_000) +
                        rng.normal(mu[1], sigma[1], 1_000_000))
        lo = int(min(total.min(), c.origin))
        hi = int(max(total.max(), c.support_max))
        hist = np.bincount((total - lo).astype(int), minlength=hi - lo + 1) / total.size
        ours = np.zeros(hi - lo + 1)
        start = int(round(c.origin)) - lo
        ours[start:start + c.size] = c.mass
        assert np.abs(hist - ours).sum() <= 0.02

        deadline = float(np.quantile(total, 0.7))
        assert abs(prob_on_time(c, deadline) - float(np.mean(total <= deadline))) <= 0.01


def test_prob_on_time_edges():
    d = pmf_from_normal(NormalSpec(50.0, 10.0))
    assert prob_on_time(d, -5.0) == 0.0
    assert prob_on_time(d, d.origin - 1.0) == 0.0
    assert prob_on_time(d, d.support_max) == 1.0
    assert prob_on_time(d, 1e6) == 1.0
    assert abs(prob_on_time(d, 50.0) - 0.5199) < 0.02


def test_prob_on_time_monotone():
    d = pmf_from_normal(NormalSpec(80.0, 15.0))
    values = [prob_on_time(d, t) for t in range(0, 200, 5)]
    assert all(x <= y for x, y in zip(values, values[1:]))


def test_quantile_and_ci():
    d = LatencyPmf.from_mapping({10.0: 0.1, 11.0: 0.8, 12.0: 0.1})
    assert quantile(d, 0.05) == 10.0
    assert quantile(d, 0.5) == 11.0
    assert quantile(d, 0.95) == 12.0
    ci = central_ci(LatencyPmf.point(30.0))
    assert (ci.lo, ci.hi) == (30.0, 30.0)


def test_ci_disjoint_rules():
    a = CiInterval(10.0, 20.0, 0.95)
    assert ci_disjoint(a, CiInterval(21.0, 30.0, 0.95))
    assert not ci_disjoint(a, CiInterval(20.0, 30.0, 0.95))  # estremo in comune
    assert not ci_disjoint(a, CiInterval(15.0, 16.0, 0.95))
    with pytest.raises(InvalidComparisonError):
        ci_disjoint(a, CiInterval(21.0, 30.0, 0.9))


def test_shift():
    d = LatencyPmf.from_mapping({5.0: 0.5, 6.0: 0.5})
    moved = shift(d, 2.4)
    assert moved.origin == 7.0
    assert np.array_equal(moved.mass, d.mass)
    assert shift(d, 0.2) is d
    with pytest.raises(InvalidParameterError):
        shift(d, -1.0)


def test_sampling_is_seeded():
    d = pmf_from_normal(NormalSpec(100.0, 20.0))
    first = [sample(d, np.random.default_rng(5)) for _ in range(3)]
    second = [sample(d, np.random.default_rng(5)) for _ in range(3)]
    assert first == second
    many = sample_many(d, np.random.default_rng(9), 50_000)
    assert abs(float(many.mean()) - d.mean) < 0.5
    assert many.min() >= d.origin and many.max() <= d.support_max


def test_chain_summary_bounds():
    parts = [LatencyPmf.point(10.0), LatencyPmf.from_mapping({4.0: 0.5, 6.0: 0.5})]
    summary = convolve_chain(parts).summary()
    assert summary["min_ms"] == 14.0
    assert summary["max_ms"] == 16.0
    assert math.isclose(summary["mean_ms"], 15.0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
