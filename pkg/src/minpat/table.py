"""Contingency tables with a canonical flat cell ordering.

Cells are stored as a flat vector in row-major order over the factors in
declaration order, i.e. the *last* factor varies fastest.  For a two-way
table this is the usual reading order of the printed table (left to right,
top to bottom), which also matches the column order of the design matrices
built in :mod:`minpat.model`.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContingencyTable",
    "cell_index",
    "multi_index",
    "load_table",
    "save_table",
]


def cell_index(multi: tuple[int, ...], dims: tuple[int, ...]) -> int:
    """Flat index of a cell given its per-factor level indices (0-based)."""
    if len(multi) != len(dims):
        raise ValueError(f"expected {len(dims)} level indices, got {len(multi)}")
    flat = 0
    for lvl, d in zip(multi, dims):
        if not 0 <= lvl < d:
            raise ValueError(f"level index {lvl} out of range for factor with {d} levels")
        flat = flat * d + lvl
    return flat


def multi_index(flat: int, dims: tuple[int, ...]) -> tuple[int, ...]:
    """Inverse of :func:`cell_index`."""
    n = math.prod(dims)
    if not 0 <= flat < n:
        raise ValueError(f"flat index {flat} out of range for {n} cells")
    out = []
    for d in reversed(dims):
        out.append(flat % d)
        flat //= d
    return tuple(reversed(out))


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Observed counts of a cross-classification.

    Parameters
    ----------
    dims
        Number of levels of each factor.
    counts
        Flat vector of non-negative integer cell counts, length
        ``prod(dims)``, in canonical (last factor fastest) order.
    labels
        Optional per-factor level names.
    """

    dims: tuple[int, ...]
    counts: np.ndarray
    labels: tuple[tuple[str, ...], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"factor level counts must be positive, got {dims}")
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or counts.size != math.prod(dims):
            raise ValueError(
                f"need {math.prod(dims)} counts for dims {dims}, got shape {counts.shape}"
            )
        if not np.issubdtype(counts.dtype, np.integer):
            rounded = np.rint(counts)
            if not np.allclose(counts, rounded, atol=0, rtol=0):
                raise ValueError("cell counts must be integers")
            counts = rounded.astype(np.int64)
        else:
            counts = counts.astype(np.int64)
        if (counts < 0).any():
            raise ValueError("cell counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "counts", counts)
        if self.labels is not None:
            labels = tuple(tuple(map(str, lv)) for lv in self.labels)
            if tuple(len(lv) for lv in labels) != dims:
                raise ValueError("labels do not match factor level counts")
            object.__setattr__(self, "labels", labels)

    @property
    def n_cells(self) -> int:
        return self.counts.size

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    def as_array(self) -> np.ndarray:
        """Counts reshaped to ``dims``."""
        return self.counts.reshape(self.dims)

    def cell_index(self, multi: tuple[int, ...]) -> int:
        return cell_index(multi, self.dims)

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return multi_index(flat, self.dims)

    def cell_name(self, flat: int) -> str:
        """Human-readable name of a cell, 1-based, e.g. ``(3,1)`` or ``n121``."""
        multi = self.multi_index(flat)
        if self.n_factors == 2:
            return f"({multi[0] + 1},{multi[1] + 1})"
        return "n" + "".join(str(m + 1) for m in multi)

    @classmethod
    def from_array(cls, arr, labels=None) -> "ContingencyTable":
        a = np.asarray(arr)
        return cls(dims=a.shape, counts=a.reshape(-1), labels=labels)


def _tokenize(text: str) -> list[list[str]]:
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "," if "," in line else None
        rows.append([tok.strip() for tok in line.split(sep) if tok.strip() != ""])
    return rows


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_long(rows: list[list[str]]) -> ContingencyTable | None:
    """Rows of ``i1,...,ik,count`` with 1-based level indices; None if not long form."""
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        return None
    width = len(rows[0])
    if width < 3:
        return None
    try:
        data = np.array([[int(tok) for tok in r] for r in rows])
    except ValueError:
        return None
    idx, counts = data[:, :-1], data[:, -1]
    if (idx < 1).any():
        return None
    dims = tuple(int(d) for d in idx.max(axis=0))
    if math.prod(dims) != len(rows):
        return None
    flat = np.array([cell_index(tuple(m - 1), dims) for m in idx])
    if len(set(flat.tolist())) != len(rows):
        raise ValueError("duplicate cell coordinates in long-format table")
    out = np.empty(math.prod(dims), dtype=np.int64)
    out[flat] = counts
    return ContingencyTable(dims=dims, counts=out)


def _parse_grid(rows: list[list[str]]) -> ContingencyTable:
    if not rows:
        raise ValueError("empty table")
    col_labels = None
    if not all(_is_number(tok) for tok in rows[0]):
        col_labels = rows[0]
        rows = rows[1:]
        if not rows:
            raise ValueError("header row but no data rows")
    row_labels = None
    if any(not _is_number(r[0]) for r in rows):
        row_labels = [r[0] for r in rows]
        rows = [r[1:] for r in rows]
        if col_labels is not None and len(col_labels) == len(rows[0]) + 1:
            col_labels = col_labels[1:]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"ragged rows in table: row lengths {sorted(widths)}")
    try:
        grid = np.array([[int(tok) for tok in r] for r in rows], dtype=np.int64)
    except ValueError:
        vals = np.array([[float(tok) for tok in r] for r in rows])
        if not np.array_equal(vals, np.rint(vals)):
            raise ValueError("cell counts must be integers")
        grid = np.rint(vals).astype(np.int64)
    labels = None
    if row_labels is not None or col_labels is not None:
        labels = (
            tuple(row_labels or map(str, range(1, grid.shape[0] + 1))),
            tuple(col_labels or map(str, range(1, grid.shape[1] + 1))),
        )
    return ContingencyTable(dims=grid.shape, counts=grid.reshape(-1), labels=labels)


def load_table(source, kind: str | None = None) -> ContingencyTable:
    """Read a table from a path, file object or string.

    Two formats are supported: a rectangular count ``grid`` for two-way
    tables (optional header row and label column), and a ``long`` format
    for k-way tables with one line ``i1,...,ik,count`` per cell, level
    indices 1-based, every cell present exactly once.  With ``kind=None``
    the long form is used when the rows form a complete factorial index
    set, otherwise the grid form.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        source = str(source)
        if "\n" in source or "," in source:
            text = source
        else:
            with open(source) as fh:
                text = fh.read()
    rows = _tokenize(text)
    if kind == "grid":
        return _parse_grid(rows)
    if kind == "long":
        t = _parse_long(rows)
        if t is None:
            raise ValueError("input is not a complete long-format table")
        return t
    if kind is not None:
        raise ValueError(f"unknown table format {kind!r}")
    t = _parse_long(rows)
    return t if t is not None else _parse_grid(rows)


def save_table(table: ContingencyTable, target=None) -> str:
    """Write a table in the format :func:`load_table` reads back bit-exactly.

    Two-way tables are written as a grid, higher-way tables in long form.
    Returns the text; also writes it when ``target`` is a path or file.
    """
    buf = io.StringIO()
    if table.n_factors == 2:
        for row in table.as_array():
            buf.write(",".join(str(int(v)) for v in row) + "\n")
    else:
        for flat in range(table.n_cells):
            multi = table.multi_index(flat)
            buf.write(",".join(str(m + 1) for m in multi) + f",{int(table.counts[flat])}\n")
    text = buf.getvalue()
    if target is not None:
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w") as fh:
                fh.write(text)
    return text
