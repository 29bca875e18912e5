import itertools

import numpy as np
import pytest

from conftest import exact_rank
from minpat.model import (ModelSpec, build_design, independence, parse_model,
                          submatrix_full_rank)

# the 3x3 independence design in both codings, written out long-hand
CORNER_3X3 = np.array([
    [1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 1, 0, 0, 0],
    [1, 0, 0, 1, 0, 0, 1, 0, 0],
    [0, 1, 0, 0, 1, 0, 0, 1, 0],
], dtype=float)

SUMZERO_3X3 = np.array([
    [1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 0, 0, 0, -1, -1, -1],
    [0, 0, 0, 1, 1, 1, -1, -1, -1],
    [1, 0, -1, 1, 0, -1, 1, 0, -1],
    [0, 1, -1, 0, 1, -1, 0, 1, -1],
], dtype=float)

SUMZERO_SOCIAL = np.array([
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 0, 0, 0, 0, -1, -1, -1, -1],
    [0, 0, 0, 0, 1, 1, 1, 1, -1, -1, -1, -1],
    [1, 1, -1, -1, 1, 1, -1, -1, 1, 1, -1, -1],
    [1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1],
    [1, 1, -1, -1, 0, 0, 0, 0, -1, -1, 1, 1],
    [0, 0, 0, 0, 1, 1, -1, -1, -1, -1, 1, 1],
    [1, -1, -1, 1, 1, -1, -1, 1, 1, -1, -1, 1],
], dtype=float)


def test_corner_point_3x3_exact():
    spec = ModelSpec(dims=(3, 3), terms=((0,), (1,)), parametrization="corner_point")
    assert np.array_equal(build_design(spec).entries, CORNER_3X3)


def test_sum_to_zero_3x3_exact(design33):
    assert np.array_equal(design33.entries, SUMZERO_3X3)


def test_social_network_design_exact(design_sn):
    assert np.array_equal(design_sn.entries, SUMZERO_SOCIAL)
    assert design_sn.p == 8
    assert design_sn.two_way_shape is None


def test_two_way_independence_rank(design44):
    assert design44.p == 4 + 4 - 1
    assert design44.two_way_shape == (4, 4)


@pytest.mark.parametrize("dims,terms", [
    ((3, 3), ((0,), (1,))),
    ((4, 5), ((0,), (1,))),
    ((3, 2, 2), ((0, 1), (1, 2))),
    ((2, 2, 2), ((0, 1, 2),)),
])
def test_codings_share_row_space(dims, terms):
    a = build_design(ModelSpec(dims=dims, terms=terms, parametrization="corner_point")).entries
    b = build_design(ModelSpec(dims=dims, terms=terms, parametrization="sum_to_zero")).entries
    # projecting each row of one onto the row space of the other reproduces it
    for src, dst in ((a, b), (b, a)):
        proj = dst.T @ np.linalg.lstsq(dst.T, src.T, rcond=None)[0]
        assert np.max(np.abs(proj - src.T)) < 1e-10


def _flat(cells, ncols):
    return [i * ncols + j for i, j in cells]


def test_submatrix_rank_examples(design33):
    singular = _flat([(0, 0), (0, 1), (1, 0), (1, 1), (2, 2)], 3)
    regular = _flat([(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)], 3)
    assert not submatrix_full_rank(design33, singular)
    assert submatrix_full_rank(design33, regular)
    assert not submatrix_full_rank(design33, [0, 1, 2, 3])  # fewer than p cells
    with pytest.raises(ValueError):
        submatrix_full_rank(design33, [])


@pytest.mark.parametrize("fixture", ["design33", "design34"])
def test_rank_matches_exact_arithmetic_all_subsets(fixture, request):
    design = request.getfixturevalue(fixture)
    n = design.n_cells
    for size in range(1, n + 1):
        for sub in itertools.combinations(range(n), size):
            got = submatrix_full_rank(design, sub)
            want = exact_rank(design.entries[:, list(sub)]) == design.p
            assert got == want, f"disagreement on {sub}"


def test_duplicate_terms_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        ModelSpec(dims=(3, 3), terms=((0,), (0,)))


def test_parse_model():
    spec = parse_model("independence", (4, 4))
    assert spec.terms == ((0,), (1,))
    spec = parse_model("1,2|2,3", (3, 2, 2))
    assert spec.terms == ((0, 1), (1, 2))
    with pytest.raises(ValueError):
        parse_model("1,x", (3, 3))


def test_closure_order():
    spec = ModelSpec(dims=(3, 2, 2), terms=((0, 1), (1, 2)))
    assert spec.closure() == [(0,), (1,), (2,), (0, 1), (1, 2)]
