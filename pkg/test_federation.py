"""
Test della federazione: griglia, distanze, matrici ETC/ETT
"""

import math

import numpy as np
import pytest

from federation_manager import (EtcMatrix, EttMatrix, FogSystem, LinkProfile, build_etc, build_ett,
                                build_grid, hop_distance, mean_exec_profile)
from latency_dist import LatencyPmf, NormalSpec
from sim_errors import InvalidIdError, InvalidParameterError, MissingProfileError


def test_grid_adjacency():
    topo = build_grid(3, 3, seed=1)
    assert topo.fog_ids == list(range(9))
    assert topo.neighbors(4) == (1, 3, 5, 7)
    assert topo.degree(0) == 2
    assert topo.degree(1) == 3
    assert topo.max_hops == 4
    assert hop_distance(topo, 0, 8) == 4
    assert hop_distance(topo, 4, 4) == 0


def test_grid_is_seeded():
    a = build_grid(3, 3, seed=11).mips_vector()
    b = build_grid(3, 3, seed=11).mips_vector()
    c = build_grid(3, 3, seed=12).mips_vector()
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.all((a >= 1500.0) & (a <= 2500.0))


def test_single_fog_has_no_neighbors():
    topo = build_grid(1, 1, seed=0)
    assert topo.neighbors(0) == ()
    assert topo.max_hops == 0


def test_invalid_ids_and_parameters():
    topo = build_grid(2, 1, seed=0)
    with pytest.raises(InvalidIdError):
        topo.fog(5)
    with pytest.raises(InvalidParameterError):
        FogSystem(0, (0, 0), 3000.0)
    with pytest.raises(InvalidParameterError):
        build_grid(0, 3, seed=0)
    with pytest.raises(InvalidParameterError):
        LinkProfile(bandwidth_mbps=0.0)


def test_etc_scales_with_speed():
    topo = build_grid(2, 2, seed=3)
    etc = build_etc(topo, {"job": NormalSpec(4000.0, 400.0)})
    for fog in topo.fogs:
        expected = 4000.0 * 1000.0 / fog.node_mips
        assert abs(etc.mean("job", fog.id) - expected) < 0.5
    with pytest.raises(MissingProfileError):
        etc.get("other", 0)
    expected_mean = math.fsum(etc.mean("job", f) for f in topo.fog_ids) / 4
    assert math.isclose(mean_exec_profile(etc, "job"), expected_mean)


def test_chain_is_cached():
    etc = EtcMatrix({("a", 0): LatencyPmf.point(10.0), ("b", 0): LatencyPmf.point(5.0)})
    first = etc.chain(["a", "b"], 0)
    assert first is etc.chain(["a", "b"], 0)
    assert first.origin == 15.0
    assert etc.chain_mean(["a", "b"], 0) == 15.0


def test_ett_by_hops():
    topo = build_grid(3, 1, seed=0)
    link = LinkProfile(1000.0, NormalSpec(20.0, 5.0))
    ett = build_ett(topo, link, {"big": 10.0})
    zero = ett.get("big", 1, 0)
    assert zero.size == 1 and zero.origin == 0.0
    one = ett.get("big", 1, 1)
    assert abs(one.mean - 100.0) < 0.5  # 20 ms di latenza + 80 ms per 10 MB a 1 Gbps
    two = ett.get("big", 1, 2)
    assert abs(two.mean - 200.0) < 0.5
    with pytest.raises(MissingProfileError):
        ett.get("big", 1, 3)


def test_ett_transfer_by_payload():
    topo = build_grid(3, 1, seed=0)
    ett = build_ett(topo, LinkProfile(1000.0, NormalSpec(20.0, 5.0)), {"big": 10.0})
    small = ett.transfer(1.0, 1)
    assert abs(small.mean - 28.0) < 0.5  # 20 ms + 8 ms per 1 MB
    assert ett.transfer(10.0, 2).allclose(ett.get("big", 1, 2))
    assert ett.transfer(1.0, 1) is small
    assert ett.transfer(5.0, 0).origin == 0.0
    with pytest.raises(MissingProfileError):
        ett.transfer(1.0, 3)
    with pytest.raises(MissingProfileError):
        EttMatrix({}).transfer(1.0, 1)
    with pytest.raises(InvalidParameterError):
        ett.transfer(-1.0, 1)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
