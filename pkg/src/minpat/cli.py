"""Command-line front end.

Subcommands: ``detect`` (run one detector on a table file), ``patterns``
(count, enumerate or sample minimal patterns), ``region`` (print a
Poisson inlier interval), ``fit`` (fit a model on a cell subset),
``simulate`` (detection-rate scenarios and the cutoff study), and
``casestudy`` (rerun the bundled datasets and compare with the published
reference detections).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Reports are JSON and embed the configuration, the seed and the library
version, so identical invocations produce identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .datasets import CASE_STUDIES, case_study
from .detect import detect, detect_oltcs
from .estimate import fit_l1, fit_ml
from .model import ModelSpec, build_design, parse_model
from .patterns import (EnumerationCapExceeded, enumerate_minimal,
                       enumerate_strictly_minimal, minimal_pattern_size,
                       sample_catalog)
from .region import outlier_region
from .simulate import SCENARIOS, cutoff_study, evaluate_rates, run_scenarios
from .table import load_table

USAGE_ERROR, DATA_ERROR, NUMERICAL_ERROR = 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _design_for(table, model_text, coding="sumzero"):
    spec = parse_model(model_text, table.dims)
    if coding == "corner":
        spec = ModelSpec(dims=spec.dims, terms=spec.terms, parametrization="corner_point")
    return build_design(spec)


def _emit(payload: dict, path: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _base_payload(args, **extra) -> dict:
    cfg = {k: v for k, v in vars(args).items()
           if k not in ("func", "out") and v is not None}
    return {"version": __version__, "config": cfg, **extra}


def _catalog_for(design, args):
    n_candidates = math.comb(design.n_cells, minimal_pattern_size(design))
    if args.patterns_budget is None and n_candidates <= 2_000_000:
        return enumerate_minimal(design)
    budget = args.patterns_budget or 1000
    if args.seed is None:
        raise CliError("--seed is required when patterns are sampled", USAGE_ERROR)
    return sample_catalog(design, budget, (args.seed, 1), kind="minimal")


def _cell_names(table, cells):
    return [table.cell_name(c) for c in cells]


def cmd_detect(args):
    table = _load(args.input, args.format)
    design = _design_for(table, args.model, args.coding)
    method = args.method.lower()
    try:
        if method == "ol1":
            rep = detect(table, design, "ol1", args.alpha, estimator=args.estimator)
        elif method in ("omp", "ompc", "ompcl1"):
            catalog = _catalog_for(design, args)
            kw = {"g": args.g} if method != "omp" else {}
            rep = detect(table, design, method, args.alpha, catalog=catalog, **kw)
        elif method in ("oltcs", "olmcs"):
            if args.seed is None:
                raise CliError("--seed is required for oltcs", USAGE_ERROR)
            rep = detect_oltcs(table, design, args.alpha, n_subsets=args.subsets,
                               variant="lmcs" if method == "olmcs" else "ltcs",
                               seed=args.seed)
        else:
            raise CliError(f"unknown method {args.method!r}", USAGE_ERROR)
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        raise CliError(str(exc), NUMERICAL_ERROR)
    payload = _base_payload(args, report=rep.to_dict(),
                            outlier_names=_cell_names(table, rep.outlier_cells()))
    _emit(payload, args.out)
    print(f"{method}: outliers "
          f"{', '.join(_cell_names(table, rep.outlier_cells())) or 'none'}",
          file=sys.stderr)
    if rep.solutions is not None and len(rep.solutions) > 1:
        for i, sol in enumerate(rep.solutions, 1):
            names = _cell_names(table, np.where(sol.flags)[0])
            print(f"  solution {i} ({sol.n_patterns} patterns): "
                  f"{', '.join(names) or 'none'}", file=sys.stderr)


def cmd_patterns(args):
    dims = tuple(int(d) for d in args.dims.split(","))
    design = build_design(parse_model(args.model, dims))
    payload = _base_payload(args)
    if args.sample:
        if args.seed is None:
            raise CliError("--seed is required for sampling", USAGE_ERROR)
        cat = sample_catalog(design, args.sample, args.seed,
                             kind=args.kind, method=args.sampler)
        payload["n_draws"] = cat.n_draws
        payload["n_distinct"] = cat.n_patterns
        payload["seed"] = cat.seed
        if args.enumerate:
            payload["patterns"] = cat.to_text().splitlines()
    else:
        try:
            cat_m = enumerate_minimal(design, cap=args.cap)
            cat_s = enumerate_strictly_minimal(design, cap=args.cap)
        except EnumerationCapExceeded as exc:
            raise CliError(str(exc), USAGE_ERROR)
        payload["minimal"] = cat_m.n_patterns
        payload["strictly_minimal"] = cat_s.n_patterns
        if args.enumerate:
            payload["patterns"] = cat_m.to_text().splitlines()
        print(f"{cat_m.n_patterns} minimal / {cat_s.n_patterns} strictly minimal",
              file=sys.stderr)
    _emit(payload, args.out)


def cmd_region(args):
    reg = outlier_region(args.mean, args.alpha)
    print(f"{reg.lo} {reg.hi} {reg.threshold:.6g}")


def cmd_fit(args):
    table = _load(args.input, args.format)
    design = _design_for(table, args.model, args.coding)
    cells = None
    if args.cells:
        cells = sorted(int(tok) for tok in args.cells.replace(",", " ").split())
    fit = (fit_l1 if args.estimator == "l1" else fit_ml)(design, table, cells)
    if not fit.converged:
        raise CliError("fit did not converge", NUMERICAL_ERROR)
    payload = _base_payload(args, beta=fit.beta.tolist(),
                            fitted_means=fit.fitted_means.tolist(),
                            objective=fit.objective, iterations=fit.iterations,
                            converged=fit.converged)
    _emit(payload, args.out)


def cmd_simulate(args):
    if args.cutoff_study:
        rows = cutoff_study(args.seed, n_rep=args.replications or 1000)
        _emit(_base_payload(args, results=rows), args.out)
        sizes = sorted({r["size"] for r in rows})
        gs = sorted({r["g"] for r in rows})
        for size in sizes:
            for model in ("M0", "M1"):
                vals = {r["g"]: r["proportion"] for r in rows
                        if r["size"] == size and r["model"] == model}
                cells = " ".join(f"{vals[g]:.3f}" for g in gs)
                print(f"{size}x{size} {model}: {cells}", file=sys.stderr)
        return
    scenarios = [int(s) for s in args.scenario.split(",")] if args.scenario else None
    methods = args.method.split(",") if args.method else None
    rows = run_scenarios(args.seed, scenarios=scenarios, methods=methods,
                         n_rep=args.replications)
    _emit(_base_payload(args, results=rows), args.out)
    for r in rows:
        print(f"scenario {r['scenario']} arm {r['arm']:>2} {r['method']:>6}: "
              f"outliers {r['outliers']:.3f} inliers {r['inliers']:.3f}",
              file=sys.stderr)


def cmd_casestudy(args):
    study = case_study(args.name)
    table = study["table"]()
    design = build_design(study["model"]())
    results = []
    print(f"{args.name}: observed counts {table.counts.tolist()}", file=sys.stderr)
    for method, alpha, kw in study["runs"]:
        if method in ("omp", "ompc", "ompcl1"):
            catalog = enumerate_minimal(design)
            rep = detect(table, design, method, alpha, catalog=catalog, **kw)
        elif method in ("oltcs", "olmcs"):
            rep = detect(table, design, method, alpha,
                         seed=args.seed if args.seed is not None else 1, **kw)
        else:
            rep = detect(table, design, method, alpha, **kw)
        ours = rep.outlier_cells()
        ref = study["reference"].get((method, alpha))
        line = {"method": method, "alpha": alpha,
                "detected": ours, "detected_names": _cell_names(table, ours),
                "reference": ref, "reference_names": _cell_names(table, ref or [])}
        if rep.solutions is not None:
            line["solutions"] = [
                {"cells": np.where(s.flags)[0].tolist(), "n_patterns": s.n_patterns}
                for s in rep.solutions]
        results.append(line)
        mark = "=" if sorted(ours) == sorted(ref or []) else "!"
        print(f"  {method:>7} a={alpha:g}: ours {', '.join(line['detected_names']) or 'none':<30}"
              f" {mark} published {', '.join(line['reference_names']) or 'none'}",
              file=sys.stderr)
    _emit(_base_payload(args, results=results), args.out)


def _load(path, fmt):
    try:
        return load_table(path, kind=fmt)
    except FileNotFoundError as exc:
        raise CliError(str(exc), DATA_ERROR)
    except ValueError as exc:
        raise CliError(f"bad table: {exc}", DATA_ERROR)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minpat",
                                 description="Outlier detection in contingency tables "
                                             "with minimal patterns")
    ap.add_argument("--version", action="version", version=f"minpat {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, model=True):
        p.add_argument("--out", help="write the JSON report here (default: stdout)")
        if model:
            p.add_argument("--model", default="independence",
                           help="'independence' or terms like '1,2|2,3' (1-based factors)")
            p.add_argument("--coding", choices=["sumzero", "corner"], default="sumzero",
                           help="parametrization (fits are identical either way)")

    d = sub.add_parser("detect", help="run an outlier detector on a table")
    d.add_argument("--method", required=True,
                   choices=["ol1", "omp", "ompc", "ompcl1", "oltcs", "olmcs"])
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--input", required=True)
    d.add_argument("--format", choices=["grid", "long"], default=None)
    d.add_argument("--estimator", choices=["l1", "ml"], default="l1",
                   help="estimator for ol1 (default l1)")
    d.add_argument("--g", type=float, default=0.5, help="vote cutoff for ompc/ompcl1")
    d.add_argument("--subsets", type=int, default=1000, help="elemental subsets for oltcs")
    d.add_argument("--patterns-budget", type=int, default=None,
                   help="sample this many patterns instead of enumerating")
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--threads", type=int, default=None, help="accepted for symmetry; "
                   "computations are vectorized and run in-process")
    add_common(d)
    d.set_defaults(func=cmd_detect)

    p = sub.add_parser("patterns", help="count, enumerate or sample minimal patterns")
    p.add_argument("--dims", required=True, help="factor level counts, e.g. 4,4")
    p.add_argument("--count", action="store_true", help="print pattern counts (default)")
    p.add_argument("--enumerate", action="store_true", help="include the patterns themselves")
    p.add_argument("--sample", type=int, default=None, metavar="K", help="draw K patterns")
    p.add_argument("--kind", choices=["minimal", "strictly_minimal"], default="minimal")
    p.add_argument("--sampler", choices=["uniform", "sequential"], default="uniform")
    p.add_argument("--cap", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=None)
    add_common(p)
    p.set_defaults(func=cmd_patterns)

    r = sub.add_parser("region", help="print 'lo hi K(alpha)' of a Poisson inlier interval")
    r.add_argument("--mean", type=float, required=True)
    r.add_argument("--alpha", type=float, required=True)
    r.set_defaults(func=cmd_region)

    f = sub.add_parser("fit", help="fit the model on a cell subset")
    f.add_argument("--input", required=True)
    f.add_argument("--format", choices=["grid", "long"], default=None)
    f.add_argument("--cells", help="flat cell indices, e.g. '0,1,4,5,8'")
    f.add_argument("--estimator", choices=["ml", "l1"], default="ml")
    add_common(f)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="rerun the simulation scenarios")
    s.add_argument("--scenario", help=f"comma-separated subset of {sorted(SCENARIOS)}")
    s.add_argument("--method", help="comma-separated subset of ol1,oltcs,ompc,ompcl1")
    s.add_argument("--replications", type=int, default=None)
    s.add_argument("--cutoff-study", action="store_true")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--threads", type=int, default=None)
    add_common(s, model=False)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("casestudy", help="rerun a bundled dataset")
    c.add_argument("name", choices=sorted(CASE_STUDIES))
    c.add_argument("--seed", type=int, default=None)
    add_common(c, model=False)
    c.set_defaults(func=cmd_casestudy)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
