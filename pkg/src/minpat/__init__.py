"""Outlying-cell detection in contingency tables under loglinear Poisson
models, built on minimal patterns: just-identifying majority subsets of
cells whose fits expose the cells that do not belong."""

from .table import ContingencyTable, cell_index, multi_index, load_table, save_table
from .model import (ModelSpec, DesignMatrix, build_design, independence,
                    parse_model, submatrix_full_rank)
from .region import (OutlierRegion, outlier_region, is_outlier, outlier_flags,
                     poisson_pmf, poisson_log_pmf)
from .estimate import (FitResult, TrimSpec, fit_ml, fit_l1, optimal_h,
                       pearson_components, trimmed_chisq)
from .patterns import (PatternCatalog, EnumerationCapExceeded,
                       minimal_pattern_size, contains_k_cycle,
                       is_strictly_minimal, is_minimal_pattern,
                       enumerate_minimal, enumerate_strictly_minimal,
                       sample_minimal, sample_strictly_minimal, sample_catalog)
from .detect import (DetectionReport, OmpSolution, detect, detect_ol1,
                     detect_omp, detect_ompc, detect_oltcs)
from . import datasets, simulate

__version__ = "0.1.0"

__all__ = [
    "ContingencyTable", "cell_index", "multi_index", "load_table", "save_table",
    "ModelSpec", "DesignMatrix", "build_design", "independence", "parse_model",
    "submatrix_full_rank",
    "OutlierRegion", "outlier_region", "is_outlier", "outlier_flags",
    "poisson_pmf", "poisson_log_pmf",
    "FitResult", "TrimSpec", "fit_ml", "fit_l1", "optimal_h",
    "pearson_components", "trimmed_chisq",
    "PatternCatalog", "EnumerationCapExceeded", "minimal_pattern_size",
    "contains_k_cycle", "is_strictly_minimal", "is_minimal_pattern",
    "enumerate_minimal", "enumerate_strictly_minimal",
    "sample_minimal", "sample_strictly_minimal", "sample_catalog",
    "DetectionReport", "OmpSolution", "detect", "detect_ol1", "detect_omp",
    "detect_ompc", "detect_oltcs",
    "datasets", "simulate",
    "__version__",
]
