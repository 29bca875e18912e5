import itertools
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import exact_rank
from minpat.model import build_design, independence
from minpat.patterns import (EnumerationCapExceeded, contains_k_cycle,
                             enumerate_minimal, enumerate_strictly_minimal,
                             is_minimal_pattern, is_strictly_minimal,
                             minimal_pattern_size, sample_catalog,
                             sample_minimal, sample_strictly_minimal)
from minpat.patterns import _sequential_tree


def _flat(cells, ncols):
    return [i * ncols + j for i, j in cells]


def test_cycle_detection_examples():
    two_cycle = _flat([(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)], 3)
    assert contains_k_cycle(two_cycle, (3, 3))
    chain = _flat([(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)], 3)
    assert not contains_k_cycle(chain, (3, 3))
    # a 3-cycle with no complete 2x2 subtable
    three_cycle = _flat([(0, 0), (0, 1), (1, 0), (1, 2), (2, 1), (2, 2), (3, 3)], 4)
    assert contains_k_cycle(three_cycle, (4, 4))
    for size in (1, 2):
        for sub in itertools.combinations(range(9), size):
            assert not contains_k_cycle(sub, (3, 3))


def test_strict_minimality_examples(design33):
    assert is_strictly_minimal(design33, _flat([(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)], 3))
    assert not is_strictly_minimal(design33, _flat([(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)], 3))
    d22 = build_design(independence((2, 2)))
    for sub in itertools.combinations(range(4), 3):
        assert is_strictly_minimal(d22, sub)


def test_minimal_pattern_examples(design34):
    assert minimal_pattern_size(design34) == 7
    ok = [0, 1, 5, 6, 7, 8, 11]  # touches every row and column, connected
    assert is_minimal_pattern(design34, ok)
    no_row3 = [0, 1, 2, 3, 4, 5, 6]  # rows 1-2 only
    assert not is_minimal_pattern(design34, no_row3)
    assert not is_minimal_pattern(design34, ok[:-1])  # wrong size


def test_cycle_free_equals_full_rank_theorem(design33):
    for sub in itertools.combinations(range(9), 5):
        cyc = not contains_k_cycle(sub, (3, 3))
        rank = exact_rank(design33.entries[:, list(sub)]) == 5
        assert cyc == rank


def test_corollary_three_conditions(design33):
    for sub in itertools.combinations(range(9), 5):
        rows = {c // 3 for c in sub}
        cols = {c % 3 for c in sub}
        lonely = any(
            all(o == c or (o // 3 != c // 3 and o % 3 != c % 3) for o in sub)
            for c in sub
        )
        criterion = len(rows) == 3 and len(cols) == 3 and not lonely
        assert criterion == (not contains_k_cycle(sub, (3, 3)))


@pytest.mark.parametrize("dims,n_min,n_strict", [
    ((3, 3), 81, 81),
    ((2, 5), 80, 80),
    ((3, 4), 612, 432),
])
def test_enumeration_counts_small(dims, n_min, n_strict):
    design = build_design(independence(dims))
    assert enumerate_minimal(design).n_patterns == n_min
    assert enumerate_strictly_minimal(design).n_patterns == n_strict


@pytest.mark.parametrize("dims", [(3, 3), (2, 5), (3, 4), (3, 5), (4, 4)])
def test_strict_count_equals_spanning_tree_formula(dims):
    # strictly minimal patterns of two-way independence are the spanning
    # trees of the complete bipartite graph: I^(J-1) * J^(I-1) of them
    I, J = dims
    design = build_design(independence(dims))
    assert enumerate_strictly_minimal(design).n_patterns == I ** (J - 1) * J ** (I - 1)


def test_enumeration_agrees_with_rank_oracle(design_sn):
    cat = enumerate_minimal(design_sn)
    assert cat.n_patterns == 144  # out of C(12,8) = 495
    want = {s for s in itertools.combinations(range(12), 8)
            if exact_rank(design_sn.entries[:, list(s)]) == 8}
    assert {tuple(r) for r in cat.patterns} == want


def test_enumeration_cap():
    design = build_design(independence((6, 6)))
    with pytest.raises(EnumerationCapExceeded, match="sample_catalog"):
        enumerate_minimal(design, cap=1000)


def test_exclusion_counts_identity(design34):
    cat = enumerate_minimal(design34)
    r = cat.exclusion_counts()
    assert ((cat.n_draws - r).sum()) == cat.n_patterns * cat.size
    member = cat.membership()
    np.testing.assert_array_equal(r, cat.n_patterns - member.sum(axis=0))


def test_samplers_return_valid_patterns(design44, design_sn):
    rng = np.random.default_rng(5)
    for _ in range(50):
        s = sample_strictly_minimal(design44, rng)
        assert is_strictly_minimal(design44, s)
        m = sample_minimal(design44, rng)
        assert is_minimal_pattern(design44, m)
        g = sample_strictly_minimal(design_sn, rng)
        assert is_strictly_minimal(design_sn, g)
    s = sample_strictly_minimal(design44, rng, method="sequential")
    assert is_strictly_minimal(design44, s)
    m = sample_minimal(design44, rng, method="sequential")
    assert is_minimal_pattern(design44, m)


def test_sampler_uniformity_smoke(design33):
    # full-strength goodness of fit lives in the acceptance suite
    rng = np.random.default_rng(17)
    seen = {sample_strictly_minimal(design33, rng) for _ in range(3000)}
    assert len(seen) == 81


def test_sequential_sampler_first_picks_unrestricted():
    # no candidate can close a cycle before the fourth pick: every
    # 3-subset of a 3x3 table is cycle-free
    for sub in itertools.combinations(range(9), 3):
        assert not contains_k_cycle(sub, (3, 3))
    rng = np.random.default_rng(2)
    trees = {tuple(_sequential_tree((3, 3), rng)) for _ in range(2000)}
    assert len(trees) == 81  # reaches every strictly minimal pattern


def test_sequential_sampler_known_bias(design33):
    # the greedy scheme is measurably non-uniform: the exact pattern
    # probabilities are 5/432, 13/1008 or 5/378, never 1/81; with enough
    # draws a goodness-of-fit test must reject uniformity
    rng = np.random.default_rng(123)
    counts = {}
    n = 40_000
    for _ in range(n):
        t = sample_strictly_minimal(design33, rng, method="sequential")
        counts[t] = counts.get(t, 0) + 1
    freq = np.array([counts.get(t, 0) for t in sorted(counts)])
    assert freq.size == 81
    stat, p = chisquare(freq)
    assert p < 1e-4


def test_monte_carlo_catalog_draw_counts(design44):
    cat = sample_catalog(design44, 500, seed=9, kind="strictly_minimal")
    assert not cat.exhaustive
    assert cat.n_draws == 500
    assert cat.n_patterns <= 500
    assert cat.seed == 9
    assert (cat.draw_counts >= 1).all()
    r = cat.exclusion_counts()
    assert ((cat.n_draws - r).sum()) == 500 * cat.size


def test_catalog_text_round_trip(design33):
    cat = enumerate_strictly_minimal(design33)
    lines = cat.to_text().strip().splitlines()
    assert len(lines) == 81
    assert lines[0].split() == [str(v) for v in cat.patterns[0]]
