import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from minpat.table import ContingencyTable, cell_index, load_table, multi_index, save_table

NEVADA_CSV = """\
type,contiguity,near,mid,far
drills,2,10,4,2
pots,3,8,4,6
grinding stones,13,5,3,9
point fragments,20,36,19,20
"""


def test_load_nevada_grid():
    t = load_table(io.StringIO(NEVADA_CSV))
    assert t.dims == (4, 4)
    assert t.counts.tolist() == [2, 10, 4, 2, 3, 8, 4, 6, 13, 5, 3, 9, 20, 36, 19, 20]
    assert t.labels[0][2] == "grinding stones"


def test_load_glass_grid_headerless():
    text = "588,395,159\n349,714,447\n111,320,411\n"
    t = load_table(text)
    assert t.dims == (3, 3)
    assert t.counts.tolist() == [588, 395, 159, 349, 714, 447, 111, 320, 411]


def test_load_single_cell():
    t = load_table("0\n")
    assert t.dims == (1, 1)
    assert t.counts.tolist() == [0]


def test_load_long_three_way():
    lines = []
    k = 0
    for i in range(3):
        for j in range(2):
            for l in range(2):
                lines.append(f"{i+1},{j+1},{l+1},{k}")
                k += 1
    t = load_table("\n".join(lines))
    assert t.dims == (3, 2, 2)
    assert t.counts.tolist() == list(range(12))


def test_long_duplicate_coordinates_rejected():
    text = "1,1,5\n1,1,6\n2,1,7\n2,2,8\n"
    with pytest.raises(ValueError, match="duplicate"):
        load_table(text, kind="long")


def test_ragged_rows_rejected():
    with pytest.raises(ValueError, match="ragged"):
        load_table("1,2,3\n4,5\n")


def test_negative_and_fractional_counts_rejected():
    with pytest.raises(ValueError, match="non-negative"):
        load_table("1,2\n-3,4\n")
    with pytest.raises(ValueError, match="integer"):
        load_table("1.5,2\n3,4\n")


@pytest.mark.parametrize("maker", [
    lambda: ContingencyTable.from_array(np.arange(12).reshape(3, 4)),
    lambda: ContingencyTable.from_array(np.arange(12).reshape(3, 2, 2)),
])
def test_save_load_round_trip(maker, tmp_path):
    t = maker()
    path = tmp_path / "t.csv"
    save_table(t, path)
    back = load_table(path)
    assert back.dims == t.dims
    assert np.array_equal(back.counts, t.counts)


def test_cell_index_examples():
    assert cell_index((0, 0), (3, 3)) == 0
    assert cell_index((2, 2), (3, 3)) == 8
    # row-major strides for dims (3,2,2) are (4,2,1)
    assert cell_index((1, 1, 0), (3, 2, 2)) == 1 * 4 + 1 * 2 + 0
    assert multi_index(8, (3, 2, 2)) == (2, 0, 0)
    with pytest.raises(ValueError):
        cell_index((3, 0), (3, 3))
    with pytest.raises(ValueError):
        cell_index((1, 2, 0), (3, 2, 2))  # level 2 of a two-level factor
    with pytest.raises(ValueError):
        multi_index(9, (3, 3))


@pytest.mark.parametrize("dims", [(2,), (5,), (3, 4), (2, 3, 4), (5, 5, 5)])
def test_index_bijection_exhaustive(dims):
    n = int(np.prod(dims))
    seen = set()
    for flat in range(n):
        multi = multi_index(flat, dims)
        assert cell_index(multi, dims) == flat
        seen.add(multi)
    assert len(seen) == n


@given(st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=4).map(tuple),
       st.data())
def test_index_round_trip_property(dims, data):
    n = int(np.prod(dims))
    flat = data.draw(st.integers(min_value=0, max_value=n - 1))
    assert cell_index(multi_index(flat, dims), dims) == flat


def test_counts_immutable():
    t = ContingencyTable.from_array(np.eye(2, dtype=int))
    with pytest.raises(ValueError):
        t.counts[0] = 5


def test_cell_names():
    t = ContingencyTable.from_array(np.arange(12).reshape(3, 2, 2))
    assert t.cell_name(0) == "n111"
    assert t.cell_name(2) == "n121"
    t2 = ContingencyTable.from_array(np.arange(16).reshape(4, 4))
    assert t2.cell_name(8) == "(3,1)"
