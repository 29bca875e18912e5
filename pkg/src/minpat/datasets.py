"""Bundled case-study tables from the published literature.

Three classic datasets exercise the detectors: a two-way table that is
close to independence apart from a couple of cells, one that grossly
violates independence, and a three-way table fit with a conditional
independence model.
"""

from __future__ import annotations

import numpy as np

from .model import ModelSpec, independence
from .table import ContingencyTable

__all__ = [
    "nevada",
    "glass",
    "social_network",
    "case_study",
    "CASE_STUDIES",
]


def nevada() -> ContingencyTable:
    """Archaeological finds in Nevada by artifact type and distance from
    permanent water (Mosteller and Rourke's data collection)."""
    counts = np.array([
        [2, 10, 4, 2],     # drills
        [3, 8, 4, 6],      # pots
        [13, 5, 3, 9],     # grinding stones
        [20, 36, 19, 20],  # point fragments
    ])
    labels = (
        ("drills", "pots", "grinding stones", "point fragments"),
        ("contiguity", "<0.25mi", "0.25-0.5mi", "0.5-1mi"),
    )
    return ContingencyTable.from_array(counts, labels=labels)


def glass() -> ContingencyTable:
    """Social mobility in Britain: status categories of fathers and sons
    (Glass 1954, merged to 3x3 following Goodman 1971)."""
    counts = np.array([
        [588, 395, 159],
        [349, 714, 447],
        [111, 320, 411],
    ])
    labels = (("high", "middle", "low"), ("high", "middle", "low"))
    return ContingencyTable.from_array(counts, labels=labels)


def social_network() -> ContingencyTable:
    """Friendship networks of pregnant women in Aberdeen (McKinlay 1973):
    interaction frequency x proximity x parity."""
    counts = np.array([
        [[30, 6], [2, 13]],
        [[19, 12], [16, 8]],
        [[5, 2], [10, 4]],
    ])
    labels = (("daily", "weekly", "less"), ("walk", "bus"), ("not first", "first"))
    return ContingencyTable.from_array(counts, labels=labels)


def social_network_model() -> ModelSpec:
    """Conditional independence of interaction frequency and parity given
    proximity: generating class {frequency x proximity, proximity x parity}."""
    return ModelSpec(dims=(3, 2, 2), terms=((0, 1), (1, 2)))


# Per-dataset defaults and the published reference detections the CLI
# prints alongside ours.  Cells are flat indices in canonical order.
CASE_STUDIES: dict[str, dict] = {
    "nevada": {
        "table": nevada,
        "model": lambda: independence((4, 4)),
        "alpha": 0.001,
        "runs": [
            ("ol1", 0.001, {}),
            ("omp", 0.001, {}),
            ("ompc", 0.001, {}),
            ("ompc", 0.0005, {}),
            ("ompcl1", 0.001, {}),
            ("oltcs", 0.001, {}),
        ],
        "reference": {
            ("ol1", 0.001): [],
            ("omp", 0.001): [],
            ("ompc", 0.001): [8, 9],      # (3,1), (3,2)
            ("ompc", 0.0005): [8],        # (3,1)
            ("ompcl1", 0.001): [8],
            ("oltcs", 0.001): [8],
        },
    },
    "glass": {
        "table": glass,
        "model": lambda: independence((3, 3)),
        "alpha": 0.01,
        "runs": [
            ("ol1", 0.01, {}),
            ("omp", 0.01, {}),
            ("ompc", 0.01, {}),
            ("ompcl1", 0.01, {}),
            ("oltcs", 0.01, {}),
        ],
        "reference": {
            ("ol1", 0.01): [0, 2, 6, 8],        # four corners
            ("omp", 0.01): [0, 4, 8],           # main diagonal
            ("ompc", 0.01): list(range(9)),     # every cell
            ("ompcl1", 0.01): list(range(9)),
            ("oltcs", 0.01): [0, 2, 6, 8],
        },
    },
    "socialnet": {
        "table": social_network,
        "model": social_network_model,
        "alpha": 0.01,
        "runs": [
            ("ol1", 0.01, {}),
            ("omp", 0.01, {}),
            ("ompc", 0.01, {}),
            ("ompcl1", 0.01, {}),
            ("oltcs", 0.01, {}),
        ],
        "reference": {
            ("ol1", 0.01): [0, 2],              # n111, n121
            ("omp", 0.01): [2, 3],              # two solutions: {n121} and {n122}
            ("ompc", 0.01): [0, 2, 3],          # n111, n121, n122
            ("ompcl1", 0.01): [0, 1, 2, 3, 8],  # adds n112, n311
            ("oltcs", 0.01): [2],               # n121
        },
    },
}


def case_study(name: str) -> dict:
    try:
        return CASE_STUDIES[name]
    except KeyError:
        raise ValueError(f"unknown case study {name!r}; choose from {sorted(CASE_STUDIES)}")
