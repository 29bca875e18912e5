import math

import numpy as np
import pytest

from minpat.simulate import (SCENARIOS, cutoff_study, evaluate_rates,
                             generate_scenario, planted_value)


def test_planted_values_match_published_headers():
    # scenario 1: 3x3, eta(1,1) = 4 + 0.2 + 0.4
    assert planted_value(math.exp(4.6), "a", 1e-4) == 62
    assert planted_value(math.exp(4.6), "t", 1e-4) == 141
    # scenario 2: 4x4, eta(1,1) = 3.8 + 0.2 + 0.25
    assert planted_value(math.exp(4.25), "a", 1e-4) == 39
    assert planted_value(math.exp(4.25), "t", 1e-4) == 105
    # scenario 3: second cell (1,2), eta = 3.8 + 0.2 + 0.3
    assert planted_value(math.exp(4.3), "a", 1e-4) == 42
    assert planted_value(math.exp(4.3), "t", 1e-4) == 110
    # scenario 4: (2,2), eta = 3.8 - 0.2 + 0.3
    assert planted_value(math.exp(3.9), "a", 1e-4) == 23
    assert planted_value(math.exp(3.9), "t", 1e-4) == 79
    # scenario 5: the 1e-8 variants
    assert planted_value(math.exp(4.25), "a", 1e-8) == 27
    assert planted_value(math.exp(4.25), "t", 1e-8) == 124
    assert planted_value(math.exp(4.3), "a", 1e-8) == 29
    assert planted_value(math.exp(4.3), "t", 1e-8) == 128


def test_scenario6_planted_values_are_just_outside():
    # the published header lists the interval endpoints 18/67 and 9/49
    # themselves; the construction used everywhere else (first count
    # beyond the plant-level inlier interval) gives the values one out
    from minpat.region import outlier_region
    reg1 = outlier_region(math.exp(3.7), 1e-4)
    reg2 = outlier_region(math.exp(3.3), 1e-4)
    assert (reg1.lo, reg1.hi) == (18, 67)
    assert (reg2.lo, reg2.hi) == (9, 49)
    assert planted_value(math.exp(3.7), "a", 1e-4) == 17
    assert planted_value(math.exp(3.7), "t", 1e-4) == 68
    assert planted_value(math.exp(3.3), "a", 1e-4) == 8
    assert planted_value(math.exp(3.3), "t", 1e-4) == 50


def test_scenario_specs_consistent():
    for sc, spec in SCENARIOS.items():
        design = spec.design()
        assert len(spec.beta) == design.p
        mu = spec.true_means()
        assert (mu > 0).all() and mu.size == design.n_cells
        for arm in spec.arms:
            assert len(arm) == len(spec.cells)


def test_generate_scenario_plants_and_is_deterministic():
    spec = SCENARIOS[1]
    t1 = generate_scenario(spec, "a", 5, np.random.default_rng(9))
    t2 = generate_scenario(spec, "a", 5, np.random.default_rng(9))
    np.testing.assert_array_equal(t1, t2)
    assert t1.shape == (5, 9)
    assert (t1[:, 0] == 62).all()
    tt = generate_scenario(spec, "t", 3, np.random.default_rng(9))
    assert (tt[:, 0] == 141).all()
    with pytest.raises(ValueError):
        generate_scenario(spec, "x", 2, np.random.default_rng(0))


def test_evaluate_rates_smoke():
    out = evaluate_rates("ompc", 1, "t", seed=123, n_rep=6)
    assert set(out) == {"method", "scenario", "arm", "n_rep", "outliers", "inliers"}
    assert 0.0 <= out["outliers"] <= 1.0
    assert 0.0 <= out["inliers"] <= 1.0
    again = evaluate_rates("ompc", 1, "t", seed=123, n_rep=6)
    assert again == out


def test_evaluate_rates_ol1_and_oltcs_smoke():
    for method in ("ol1", "oltcs"):
        out = evaluate_rates(method, 1, "a", seed=5, n_rep=4)
        assert 0.0 <= out["outliers"] <= 1.0


def test_cutoff_study_smoke():
    rows = cutoff_study(seed=77, sizes=(3,), n_rep=8, g_grid=(0.3, 0.5, 0.7))
    assert len(rows) == 6
    by = {(r["model"], r["g"]): r["proportion"] for r in rows}
    assert all(0.0 <= v <= 1.0 for v in by.values())
    # classification reuses one vote count per table: monotone by construction
    assert by[("M0", 0.3)] <= by[("M0", 0.5)] <= by[("M0", 0.7)]
    assert by[("M1", 0.3)] >= by[("M1", 0.5)] >= by[("M1", 0.7)]
