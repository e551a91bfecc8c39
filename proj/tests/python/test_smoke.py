import math

import pytest

import mixlab

SMALL = {
    "lattice": {"dimension": 1, "sites_per_axis": 2, "spacing": 1.0},
    "potentials": {
        "v1": {"kind": "gaussian", "strength": 1.0, "range": 1.0},
        "v2": {"kind": "gaussian", "strength": 1.0, "range": 1.0},
        "v12": {"kind": "gaussian", "strength": 1.0, "range": 1.0},
    },
    "sequence": {"pairs": [[1, 1], [2, 2]]},
    "time": {"t_final": 0.1, "dt": 0.01, "stride": 2, "samples": [0.0, 0.1]},
    "coherent": {"mean_numbers": [[1, 1]]},
}


def test_version_and_helpers():
    assert mixlab.__version__.count(".") == 2
    assert mixlab.default_cutoff(1) == 9
    assert mixlab.default_cutoff(4) == 16
    assert mixlab.sector_dimension(4, 2) == 10


def test_normalize_config_fills_defaults():
    c = mixlab.normalize_config(SMALL)
    assert c["couplings"] == {"c1": 0.5, "c2": 0.5}
    assert c["sequence"]["pairs"] == [[1, 1], [2, 2]]


def test_invalid_config_raises():
    bad = dict(SMALL, sequence={"pairs": [[10, 1]], "tolerance_d": 0.1})
    with pytest.raises(mixlab.ConfigError):
        mixlab.normalize_config(bad)
    with pytest.raises(mixlab.ConfigError):
        mixlab.normalize_config("{not json")


def test_hartree_trajectory_conserves_mass():
    traj = mixlab.hartree_trajectory(SMALL)
    assert list(traj) == ["t", "mass1", "mass2", "energy"]
    assert traj["t"][0] == 0.0
    assert math.isclose(traj["t"][-1], 0.1)
    for m in traj["mass1"] + traj["mass2"]:
        assert abs(m - 1.0) < 1e-9


def test_exact_and_coherent_records():
    exact = mixlab.run_exact(SMALL)
    assert len(exact["records"]) == 4
    for r in exact["records"]:
        assert r["pipeline"] == "exact"
        assert 0.0 <= r["trace_distance"] <= 2.0
        if r["t"] == 0.0:
            assert r["trace_distance"] < 1e-12
    coherent = mixlab.run_coherent(SMALL)
    assert len(coherent["records"]) == 2
    assert all(r["pipeline"] == "coherent" for r in coherent["records"])
