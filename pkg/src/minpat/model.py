"""Design matrices of hierarchical loglinear Poisson models.

A model is given by its generating class: a set of factor subsets whose
hierarchical closure (all non-empty subsets, plus the implied intercept)
defines the model terms.  Two codings are supported:

* ``corner_point`` -- dummy coding; each factor contributes indicator rows
  for all but its last level.
* ``sum_to_zero`` -- effect coding; level ``l`` of a factor contributes a
  row with +1 on level ``l``, -1 on the last level, 0 elsewhere.

Interaction rows are element-wise products of main-effect rows.  Both
codings span the same row space, so fitted means do not depend on the
choice; ``sum_to_zero`` is the default since it is the usual convention
in loglinear software.

The design is stored as a ``p x N`` matrix with one column per cell in
the canonical cell order of :mod:`minpat.table`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelSpec",
    "DesignMatrix",
    "build_design",
    "independence",
    "submatrix_full_rank",
    "parse_model",
]

RANK_TOL = 1e-8  # relative to the largest singular value


@dataclass(frozen=True)
class ModelSpec:
    """Generating class of a hierarchical loglinear model.

    ``terms`` holds 0-based factor index tuples, e.g. ``((0,), (1,))`` for
    two-way independence or ``((0, 1), (1, 2))`` for conditional
    independence of factors 1 and 3 given factor 2.
    """

    dims: tuple[int, ...]
    terms: tuple[tuple[int, ...], ...]
    parametrization: str = "sum_to_zero"

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ValueError("factor level counts must be positive")
        terms = []
        for t in self.terms:
            t = tuple(sorted(set(int(f) for f in t)))
            if not t:
                raise ValueError("empty model term")
            if t[0] < 0 or t[-1] >= len(dims):
                raise ValueError(f"term {t} references unknown factors")
            terms.append(t)
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate model terms")
        if self.parametrization not in ("corner_point", "sum_to_zero"):
            raise ValueError(f"unknown parametrization {self.parametrization!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "terms", tuple(terms))

    @property
    def n_cells(self) -> int:
        return math.prod(self.dims)

    def closure(self) -> list[tuple[int, ...]]:
        """All model terms implied by the generating class, ordered by
        interaction order then factor indices (intercept excluded)."""
        out = set()
        for t in self.terms:
            for r in range(1, len(t) + 1):
                out.update(itertools.combinations(t, r))
        return sorted(out, key=lambda s: (len(s), s))


def independence(dims) -> ModelSpec:
    """Main-effects-only model (mutual independence of all factors)."""
    return ModelSpec(dims=tuple(dims), terms=tuple((f,) for f in range(len(dims))))


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Full row rank ``p x N`` loglinear design, one column per cell."""

    entries: np.ndarray
    spec: ModelSpec = field(compare=False)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cells(self) -> int:
        return self.entries.shape[1]

    @property
    def two_way_shape(self) -> tuple[int, int] | None:
        """(I, J) when this is a two-way independence design, else None."""
        s = self.spec
        if s is not None and len(s.dims) == 2 and set(s.terms) == {(0,), (1,)}:
            return s.dims
        return None

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]


def _main_effect_rows(dims, factor, parametrization) -> np.ndarray:
    """Coding rows of one factor: (levels-1) x N."""
    n = math.prod(dims)
    levels = np.array(
        [m[factor] for m in itertools.product(*[range(d) for d in dims])]
    )
    d = dims[factor]
    rows = np.zeros((d - 1, n))
    for l in range(d - 1):
        rows[l, levels == l] = 1.0
        if parametrization == "sum_to_zero":
            rows[l, levels == d - 1] = -1.0
    return rows


def build_design(spec: ModelSpec) -> DesignMatrix:
    """Build the design matrix of a model; raises if not of full row rank."""
    mains = {f: _main_effect_rows(spec.dims, f, spec.parametrization) for f in range(len(spec.dims))}
    rows = [np.ones(spec.n_cells)]
    for term in spec.closure():
        reduced = [range(spec.dims[f] - 1) for f in term]
        for combo in itertools.product(*reduced):
            v = np.ones(spec.n_cells)
            for f, l in zip(term, combo):
                v = v * mains[f][l]
            rows.append(v)
    entries = np.array(rows)
    if np.linalg.matrix_rank(entries, tol=None) != entries.shape[0]:
        raise ValueError(
            f"design matrix of {spec.terms} on dims {spec.dims} is rank deficient"
        )
    return DesignMatrix(entries=entries, spec=spec)


def submatrix_full_rank(design: DesignMatrix, cells, tol: float = RANK_TOL) -> bool:
    """True iff the p x |cells| submatrix has rank p.

    Rank is judged by singular values above ``tol`` times the largest one.
    Design entries are small integers, so the spectral gap at a true rank
    deficit is large and the tolerance is uncritical.
    """
    cells = list(cells)
    if not cells:
        raise ValueError("empty cell set")
    sub = design.entries[:, cells]
    if sub.shape[1] < sub.shape[0]:
        return False
    sv = np.linalg.svd(sub, compute_uv=False)
    return bool(sv[-1] > tol * sv[0])


def parse_model(text: str, dims) -> ModelSpec:
    """Parse the textual model form used on the command line.

    ``independence`` selects the main-effects model; otherwise terms are
    separated by ``|`` and factors within a term by ``,``, 1-based, e.g.
    ``1,2|2,3``.
    """
    dims = tuple(int(d) for d in dims)
    text = text.strip().lower()
    if text in ("independence", "indep"):
        return independence(dims)
    terms = []
    for part in text.split("|"):
        try:
            factors = tuple(int(tok) - 1 for tok in part.split(","))
        except ValueError:
            raise ValueError(f"cannot parse model term {part!r}")
        terms.append(factors)
    return ModelSpec(dims=dims, terms=tuple(terms))
