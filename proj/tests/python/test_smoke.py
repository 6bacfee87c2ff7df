"""Smoke tests for the Python bindings."""

import math

import pytest

qgbsde = pytest.importorskip("qgbsde")


def test_case_registry():
    ids = qgbsde.case_ids()
    assert "qg_set1" in ids
    assert "bs_call_set1" in ids
    assert "extreme_R301" in ids


def test_solve_matches_oracle_roughly():
    report = qgbsde.solve("qg_set1", n=50)
    assert not report["divergent"]
    ref = qgbsde.oracle("qg_set1")
    assert abs(report["y0"] - ref) / ref < 0.05
    assert len(report["z0"]) == 2
    assert report["max_u"] <= 6.0 + 1e-8


def test_black_scholes():
    call = qgbsde.black_scholes_call(100.0, 106.0, 0.3, 0.06, 1.0)
    assert call == pytest.approx(11.9999036, abs=1e-6)
    put = qgbsde.black_scholes_put(100.0, 106.0, 0.3, 0.06, 1.0)
    parity = call - put - (100.0 - 106.0 * math.exp(-0.06))
    assert abs(parity) < 1e-12


def test_mc_check_consistent():
    ref = qgbsde.oracle("qg_set1")
    value, std_error = qgbsde.mc_check("qg_set1", paths=200000, seed=7)
    assert abs(value - ref) < 4.0 * std_error
    assert std_error < 0.01


def test_fit_rate():
    slope = qgbsde.fit_rate([10, 100, 1000], [0.1, 0.01, 0.001])
    assert slope == pytest.approx(-1.0, abs=1e-12)


def test_universal_bound():
    y_bound, z_bound = qgbsde.universal_bound(0.0, 2.0, 0.0, 6.0, 1.0)
    assert y_bound == pytest.approx(6.0)
    assert z_bound > 0.0
