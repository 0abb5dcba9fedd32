"""Command line front end.

Subcommands map one-to-one onto the library layers: solve (plan +
duality gap), density (grid deposit + CSV/PGM), lp-norm, bound (the
two-factor estimate), lsg (least-gradient reconstruction), cex (the
alternating-arc family).  Reports are JSON on stdout with sorted keys
and no timestamps, so identical inputs give byte-identical output.

Exit codes: 0 ok, 2 malformed problem file, 3 infeasible data,
4 flagged divergence in the requested quantity, 5 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, cex as cex_mod, density as density_mod, leastgrad
from .backend import backend_name
from .errors import InfeasibleError, SchemaError
from .geom import ChordCost, domain_from_config, norm_from_config
from .measures import (
    datum_from_config,
    measure_from_config,
    remove_common_mass,
    tangential_derivative,
)
from .ot import solve_kantorovich

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4
EXIT_INTERNAL = 5

_PROBLEM_KEYS = {"domain", "norm", "g", "f_plus", "f_minus", "grid", "quadrature", "seed"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"unknown keys in {where}: {sorted(unknown)}")


def load_problem(path: str) -> dict:
    """Parse and validate a problem file; unknown keys are rejected."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as e:
        raise SchemaError(f"cannot read problem file: {e}")
    except json.JSONDecodeError as e:
        raise SchemaError(f"problem file is not valid JSON: {e}")
    _check_keys(cfg, _PROBLEM_KEYS, "problem")
    if "domain" not in cfg:
        raise SchemaError("problem file needs a domain")
    _check_keys(cfg["domain"], {"kind", "radius", "a", "b"}, "domain")
    if "norm" in cfg:
        _check_keys(cfg["norm"], {"kind", "q", "a"}, "norm")
    if "g" in cfg and ("f_plus" in cfg or "f_minus" in cfg):
        raise SchemaError("problem file carries either g or f_plus/f_minus, not both")
    if "g" in cfg:
        _check_keys(cfg["g"], {"samples", "jumps"}, "g")
    elif ("f_plus" in cfg) != ("f_minus" in cfg):
        raise SchemaError("f_plus and f_minus must come together")
    if "grid" in cfg:
        _check_keys(cfg["grid"], {"n"}, "grid")
        if not isinstance(cfg["grid"].get("n"), int) or cfg["grid"]["n"] < 1:
            raise SchemaError("grid.n must be a positive integer")
    if "quadrature" in cfg and (
        not isinstance(cfg["quadrature"], int) or cfg["quadrature"] < 1
    ):
        raise SchemaError("quadrature must be a positive integer")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise SchemaError("seed must be an integer")
    return cfg


def _build(cfg: dict):
    """Domain, norm, and balanced measures from a validated problem."""
    try:
        domain = domain_from_config(cfg["domain"])
        norm = norm_from_config(cfg.get("norm", {"kind": "euclidean"}))
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"bad domain or norm: {e}")
    n_quad = cfg.get("quadrature", 1)
    if "g" in cfg:
        datum = datum_from_config(cfg["g"], domain.perimeter)
        f_plus, f_minus = tangential_derivative(datum, n_quad=n_quad)
        f_plus, f_minus = remove_common_mass(f_plus, f_minus)
    elif "f_plus" in cfg:
        f_plus = measure_from_config(cfg["f_plus"], domain.perimeter)
        f_minus = measure_from_config(cfg["f_minus"], domain.perimeter)
        datum = None
    else:
        raise SchemaError("problem file needs g or f_plus/f_minus")
    return domain, norm, f_plus, f_minus, datum


def _resolved_config(cfg: dict, domain, norm, grid_n: int = None) -> dict:
    out = {
        "domain": domain.config(),
        "norm": norm.config(),
        "quadrature": cfg.get("quadrature", 1),
        "seed": cfg.get("seed"),
    }
    if "g" in cfg:
        out["g"] = cfg["g"]
    if "f_plus" in cfg:
        out["f_plus"] = cfg["f_plus"]
        out["f_minus"] = cfg["f_minus"]
    if grid_n is not None:
        out["grid"] = {"n": grid_n}
    return out


def _sanitize(obj):
    """JSON-safe deep copy: numpy scalars to python, non-finite to strings."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    return obj


def _emit(report: dict, out_dir: str = None) -> None:
    text = json.dumps(_sanitize(report), sort_keys=True, separators=(", ", ": "))
    sys.stdout.write(text + "\n")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            fh.write(text + "\n")


def _base_report(command: str, seed) -> dict:
    return {
        "command": command,
        "version": __version__,
        "backend": backend_name(),
        "seed": seed,
    }


def _svg_header(lo, hi, size=640):
    w = hi[0] - lo[0]
    h = hi[1] - lo[1]
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{int(size * h / w)}" viewBox="{lo[0]} {-hi[1]} {w} {h}">\n'
    )


def _svg_path(points, stroke, width, fill="none"):
    d = "M " + " L ".join(f"{x:.6g} {-y:.6g}" for x, y in points)
    return f'<path d="{d}" stroke="{stroke}" stroke-width="{width}" fill="{fill}"/>\n'


def _write_rays_svg(path, domain, seg_a, seg_b, mass):
    """Boundary outline plus transport rays, line width by mass share."""
    x0, y0, x1, y1 = domain.bbox()
    pad = 0.05 * max(x1 - x0, y1 - y0)
    lo = (x0 - pad, y0 - pad)
    hi = (x1 + pad, y1 + pad)
    s = np.linspace(0.0, domain.perimeter, 512)
    ring = domain.boundary_point(s)
    wmax = float(np.max(mass)) if len(mass) else 1.0
    parts = [_svg_header(lo, hi)]
    parts.append(_svg_path(ring, "black", 0.004 * (hi[0] - lo[0])))
    scale = 0.01 * (hi[0] - lo[0])
    for a, b, m in zip(seg_a, seg_b, mass):
        parts.append(
            _svg_path([a, b], "steelblue", scale * max(0.1, m / wmax))
        )
    parts.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("".join(parts))


def cmd_solve(args) -> int:
    cfg = load_problem(args.problem)
    domain, norm, f_plus, f_minus, _ = _build(cfg)
    plan = solve_kantorovich(f_plus, f_minus, ChordCost(domain, norm))
    report = _base_report("solve", cfg.get("seed"))
    report["config"] = _resolved_config(cfg, domain, norm)
    report.update(plan.config())
    _emit(report, args.out)
    if args.svg:
        os.makedirs(args.out or ".", exist_ok=True)
        a, b = plan.entry_segments()
        _write_rays_svg(
            os.path.join(args.out or ".", "rays.svg"), domain, a, b, plan.mass
        )
    return EXIT_OK


def _grid_from_args(cfg, args, domain):
    n = args.grid or cfg.get("grid", {}).get("n", 512)
    return n, density_mod.grid_for_domain(domain, n)


def cmd_density(args) -> int:
    cfg = load_problem(args.problem)
    domain, norm, f_plus, f_minus, _ = _build(cfg)
    plan = solve_kantorovich(f_plus, f_minus, ChordCost(domain, norm))
    n, grid = _grid_from_args(cfg, args, domain)
    field = density_mod.deposit_partial_density(plan, args.tau, grid)
    report = _base_report("density", cfg.get("seed"))
    report["config"] = _resolved_config(cfg, domain, norm, grid_n=n)
    report["tau"] = args.tau
    report["cost"] = plan.cost
    report["integral"] = field.integral()
    files = {}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        csv_path = os.path.join(args.out, "density.csv")
        density_mod.write_csv(field, csv_path)
        files["csv"] = csv_path
        if args.svg:
            pgm_path = os.path.join(args.out, "density.pgm")
            density_mod.write_pgm(field, pgm_path)
            files["pgm"] = pgm_path
    report["files"] = files
    _emit(report, args.out)
    return EXIT_OK


def cmd_lp_norm(args) -> int:
    cfg = load_problem(args.problem)
    domain, norm, f_plus, f_minus, _ = _build(cfg)
    plan = solve_kantorovich(f_plus, f_minus, ChordCost(domain, norm))
    n, grid = _grid_from_args(cfg, args, domain)
    field = density_mod.deposit_partial_density(plan, args.tau, grid)
    value = density_mod.lp_norm(field, args.p)
    report = _base_report("lp-norm", cfg.get("seed"))
    report["config"] = _resolved_config(cfg, domain, norm, grid_n=n)
    report["p"] = args.p
    report["tau"] = args.tau
    report["lp_norm"] = value
    _emit(report, args.out)
    return EXIT_OK


def cmd_bound(args) -> int:
    cfg = load_problem(args.problem)
    domain, norm, f_plus, f_minus, _ = _build(cfg)
    plan = solve_kantorovich(f_plus, f_minus, ChordCost(domain, norm))
    n, grid = _grid_from_args(cfg, args, domain)
    field = density_mod.deposit_partial_density(plan, args.tau, grid)
    lp_power = density_mod.lp_norm(field, args.p) ** args.p
    ti, da = density_mod.lp_bound_factors(plan, args.p, args.tau)
    product = ti * da if math.isfinite(ti) and math.isfinite(da) else math.inf
    report = _base_report("bound", cfg.get("seed"))
    report["config"] = _resolved_config(cfg, domain, norm, grid_n=n)
    report["p"] = args.p
    report["tau"] = args.tau
    report["time_integral"] = ti
    report["data_integral"] = da
    report["product"] = product
    report["lp_norm_power"] = lp_power
    report["ratio"] = lp_power / product if math.isfinite(product) and product > 0 else math.inf
    _emit(report, args.out)
    if not math.isfinite(product):
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_lsg(args) -> int:
    cfg = load_problem(args.problem)
    domain, norm, f_plus, f_minus, datum = _build(cfg)
    if datum is None:
        raise SchemaError("lsg needs a problem file with a boundary datum g")
    n = args.grid or cfg.get("grid", {}).get("n", 512)
    res = leastgrad.solve_least_gradient(
        datum,
        domain,
        norm,
        grid_n=n,
        n_quad=cfg.get("quadrature", 1),
    )
    gfield = leastgrad.gradient_norm_field(res.u, norm, domain)
    report = _base_report("lsg", cfg.get("seed"))
    report["config"] = _resolved_config(cfg, domain, norm, grid_n=n)
    report["cost"] = res.cost
    report["tv"] = res.tv
    report["trace_error"] = res.trace_err
    report["lp_norms"] = {
        str(p): density_mod.lp_norm(gfield, p) for p in (1.5, 2.0)
    }
    files = {}
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        u_path = os.path.join(args.out, "u.csv")
        density_mod.write_csv(res.u, u_path)
        files["u_csv"] = u_path
        if args.svg and res.flow is not None and len(res.flow):
            svg_path = os.path.join(args.out, "rays.svg")
            _write_rays_svg(svg_path, domain, res.flow.a, res.flow.b, res.flow.mass)
            files["svg"] = svg_path
    report["files"] = files
    _emit(report, args.out)
    return EXIT_OK


def _write_arcs_svg(path, arcs, n_show):
    """Arc family layout with per-pair reflection rays."""
    domain = arcs.domain
    x0, y0, x1, y1 = domain.bbox()
    pad = 0.05 * max(x1 - x0, y1 - y0)
    lo = (x0 - pad, y0 - pad)
    hi = (x1 + pad, y1 + pad)
    parts = [_svg_header(lo, hi)]
    s = np.linspace(0.0, domain.perimeter, 1024)
    parts.append(_svg_path(domain.boundary_point(s), "lightgray", 0.002 * (hi[0] - lo[0])))
    lw = 0.006 * (hi[0] - lo[0])
    for k in range(min(n_show, arcs.n_pairs)):
        (p0, p1), (m0, m1) = arcs.intervals(k)
        sp = np.linspace(p0, p1, 64)
        sm = np.linspace(m0, m1, 64)
        parts.append(_svg_path(domain.boundary_point(sp), "firebrick", lw))
        parts.append(_svg_path(domain.boundary_point(sm), "navy", lw))
        plan = cex_mod.pair_plan(arcs, k, 8)
        a, b = plan.entry_segments()
        for pa, pb in zip(a, b):
            parts.append(_svg_path([pa, pb], "steelblue", 0.3 * lw))
    parts.append("</svg>\n")
    with open(path, "w") as fh:
        fh.write("".join(parts))


def cmd_cex(args) -> int:
    report = _base_report("cex", args.seed)
    result = cex_mod.run_counterexample(
        args.pairs,
        args.p,
        mode=args.mode,
        grid_n=args.grid or 16,
        atoms_per_arc=args.atoms_per_arc,
    )
    report.update(result)
    _emit(report, args.out)
    if args.svg:
        os.makedirs(args.out or ".", exist_ok=True)
        arcs = cex_mod.build_arcs(args.pairs)
        _write_arcs_svg(
            os.path.join(args.out or ".", "arcs.svg"), arcs, min(args.pairs, 6)
        )
    if args.mode == "exact" and any(result["diverged"]):
        return EXIT_DIVERGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="transportlab",
        description="boundary-to-boundary optimal transport toolbox",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, problem=True, grid=True, tau=False, pexp=False):
        if problem:
            p.add_argument("--problem", required=True, help="problem file (JSON)")
        if grid:
            p.add_argument("--grid", type=int, default=None, help="cells per side")
        if tau:
            p.add_argument("--tau", type=float, default=1.0, help="trip fraction")
        if pexp:
            p.add_argument("--p", type=float, required=True, help="L^p exponent")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--svg", action="store_true", help="also write plots")
        p.add_argument("--seed", type=int, default=None, help="recorded seed")

    p = sub.add_parser("solve", help="optimal plan, cost, duality gap")
    common(p, grid=False)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("density", help="deposit the (partial) transport density")
    common(p, tau=True)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("lp-norm", help="L^p norm of the deposited density")
    common(p, tau=True, pexp=True)
    p.set_defaults(func=cmd_lp_norm)

    p = sub.add_parser("bound", help="two-factor L^p estimate and empirical ratio")
    common(p, tau=True, pexp=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("lsg", help="least-gradient reconstruction from g")
    common(p)
    p.set_defaults(func=cmd_lsg)

    p = sub.add_parser("cex", help="alternating-arc counter-example report")
    common(p, problem=False, grid=True)
    p.add_argument("--pairs", type=int, required=True, help="number of arc pairs")
    p.add_argument("--p", type=float, required=True, help="L^p exponent")
    p.add_argument(
        "--mode", choices=("exact", "grid"), default="exact", help="evaluation mode"
    )
    p.add_argument(
        "--atoms-per-arc", type=int, default=64, help="quadrature atoms per arc"
    )
    p.set_defaults(func=cmd_cex)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as e:
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
