"""Command-line driver: generation, pairings, degree and measure queries,
rate studies and verification suites.

Exit codes: 0 when every check in scope passes, 1 when a check fails (the
report path is printed), 2 for usage or input errors.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .curvature import (Diffeo2D, graph_bridge_residual, graph_metric_fn, invariance_residual,
                        kappa_pairing, mollified_graph_det_min, pullback_mollification_rate)
from .degree import (DomainU, PreconditionError, degree_formula_residual, degree_mass_identity,
                     measure_of, winding_degree)
from .fields import Grid2D, ScalarField2D, VectorField2D, bump, gradient
from .generators import (GeneratorSpec, analytic_field, generate, quadratic, sample_gradient,
                         smoothed_cone, sphere_cap, weierstrass)
from .mollifier import commutator_rate, eps_ladder, triple_commutator_rate
from .monge_ampere import (alexandrov_verify, gradient_image_area, partition_rect,
                           spherical_image_tv)
from .weak_hessian import besov_decay_probe, det_hessian_pairing

SUITES = ("degree-formula", "mass-identity", "invariance", "graph-bridge", "commutators",
          "alexandrov", "extrinsic-tv")


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# shared helpers


def parse_grid(text):
    try:
        nx, ny, x0, y0, h = text.split(",")
        return Grid2D(int(nx), int(ny), float(x0), float(y0), float(h))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad --grid {text!r}: expected nx,ny,x0,y0,h") from exc


def square_grid(n, half_width, center=(0.0, 0.0)):
    h = 2.0 * half_width / (n - 1)
    return Grid2D(n, n, center[0] - half_width, center[1] - half_width, h)


def parse_floats(text, n=None, name="value"):
    try:
        out = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad {name} {text!r}") from exc
    if n is not None and len(out) != n:
        raise UsageError(f"{name} needs {n} comma-separated numbers")
    return out


def parse_tols(items, defaults):
    tols = dict(defaults)
    for it in items or []:
        name, _, val = it.partition("=")
        if name not in tols:
            raise UsageError(f"unknown tolerance {name!r}; known: {sorted(tols)}")
        try:
            x = float(val)
        except ValueError as exc:
            raise UsageError(f"bad tolerance value {val!r}") from exc
        if not x > 1e-15:
            raise UsageError(f"tolerance {name} must exceed machine precision")
        tols[name] = x
    return tols


def sampled(f, grid):
    """Node samples of a closed-form field and its exact gradient."""
    X, Y = grid.mesh()
    v = ScalarField2D(grid, np.broadcast_to(f.value(X, Y), grid.shape))
    p, q = f.grad(X, Y)
    return v, (np.broadcast_to(p, grid.shape) + 0.0, np.broadcast_to(q, grid.shape) + 0.0)


def fitted_order(hs, errs):
    """Least-squares slope of ``log err`` against ``log h``."""
    e = np.maximum(np.asarray(errs, dtype=np.float64), 1e-300)
    return float(np.polyfit(np.log(hs), np.log(e), 1)[0])


def rate_setup(K=10, window=256, eps_cells=128, rungs=5):
    """Grid, ladder and norm window for rate studies of lacunary inputs.

    ``h = 4^-K`` and the ladder runs from ``eps_cells * h`` down by halving,
    so ``min eps = eps_cells * h / 2^(rungs-1)``. The grid is centered at the
    origin with room for the largest kernel, its difference stencils and
    the differencing ring on each side of a ``window x window`` norm
    window. The generator's cosines are all in phase
    at the origin, so every resolved level contributes there.
    """
    h = 4.0 ** -K
    n = 2 * eps_cells + window + 5
    c = (n - 1) // 2
    grid = Grid2D(n, n, -c * h, -c * h, h)
    eps = eps_ladder(eps_cells * h, rungs)
    lo = c - window // 2
    win = grid.window(lo, lo + window + 1, lo, lo + window + 1)
    return grid, eps, win


def _ladder_setup(args):
    if args.eps:
        e0, k = parse_floats(args.eps, 2, "--eps")
        k = int(k)
        h = e0 / 2 ** (k - 1) / 8
        K = max(1, int(round(-math.log(h, 4))))
        if not math.isclose(4.0 ** -K, h, rel_tol=1e-9):
            raise UsageError("--eps must give min eps / 8 = 4^-K for lacunary rate studies")
        return rate_setup(K, rungs=k, eps_cells=int(round(e0 / h)))
    return rate_setup(args.K)


# ----------------------------------------------------------------------------
# suites


def suite_degree_formula(tols, spec=None):
    grid = spec.grid if spec is not None and spec.grid is not None else square_grid(257, 2.0)
    U = DomainU.disk((0.0, 0.0), 1.0)
    g = bump((0.05, 0.02), 0.3)
    delta = 0.5
    checks = []
    cases = [("quadratic", quadratic(1.0)), ("zero", quadratic(0.0))]
    if spec is not None:
        cases = [(spec.kind, analytic_field(spec.kind, spec.params, grid))]
    for name, f in cases:
        v, gr = sampled(f, grid)
        r = degree_formula_residual(v, delta, U, g, grad=gr)
        rel = r["residual"] / abs(r["lhs"]) if r["lhs"] != 0 else r["residual"]
        checks.append({"case": name, **r, "rel_residual": rel, "pass": rel <= tols["rel_residual"]})
    if spec is None:
        f = weierstrass(0.8, K=3, eta=0.2, q=1.0)
        hs, res = [], []
        for n in (65, 129, 257, 513):
            gg = square_grid(n, 2.0)
            v, gr = sampled(f, gg)
            hs.append(gg.h)
            res.append(degree_formula_residual(v, delta, U, g, grad=gr)["residual"])
        order = fitted_order(hs, res)
        checks.append({"case": "weierstrass-refinement", "h": hs, "residuals": res,
                       "order": order, "pass": order >= tols["min_order"]
                       and all(a > b for a, b in zip(res, res[1:]))})
    return checks


def suite_mass_identity(tols, spec=None):
    grid = spec.grid if spec is not None and spec.grid is not None else square_grid(257, 2.0)
    U = DomainU.disk((0.0, 0.0), 1.0)
    cases = [("quadratic", quadratic(1.0), math.pi), ("smoothed_cone", smoothed_cone(0.2), math.pi / 1.04)]
    if spec is not None:
        cases = [(spec.kind, analytic_field(spec.kind, spec.params, grid), None)]
    checks = []
    for name, f, ref in cases:
        v, gr = sampled(f, grid)
        r = degree_mass_identity(v, U, grad=gr)
        ok = r["rel_gap"] <= tols["rel_gap"]
        if ref is not None:
            r["reference"] = ref
            r["rel_to_reference"] = abs(r["mu_f_U"] - ref) / ref
            ok = ok and r["rel_to_reference"] <= tols["rel_gap"]
        checks.append({"case": name, **r, "pass": ok})
    return checks


def suite_invariance(tols, spec=None):
    gfn = graph_metric_fn(sphere_cap(2.0))
    phi = bump((0.2, -0.1), 0.4, normalize=True)
    grid = square_grid(257, 1.0)
    checks = []
    for xi in (Diffeo2D.identity(), Diffeo2D.rotation(math.pi / 2)):
        r = invariance_residual(gfn, xi, phi, grid)
        checks.append({"case": xi.name, **r, "pass": r["residual"] <= tols["exact"]})
    hs, res = [], []
    for n in (129, 257, 513):
        g = square_grid(n, 1.0)
        hs.append(g.h)
        res.append(invariance_residual(gfn, Diffeo2D.shear(0.2), phi, g)["residual"])
    order = fitted_order(hs, res)
    checks.append({"case": "shear-refinement", "h": hs, "residuals": res, "order": order,
                   "pass": order >= tols["min_order"]})
    return checks


def suite_graph_bridge(tols, spec=None):
    phi = bump((0.1, -0.1), 0.5, normalize=True)
    checks = []
    rough = weierstrass(0.8, K=3, eta=0.3, q=1.0)
    for name, f in (("sphere_cap", sphere_cap(2.0)), ("weierstrass", rough)):
        hs, res, last = [], [], None
        for n in (129, 257, 513):
            g = square_grid(n, 1.0)
            v, gr = sampled(f, g)
            last = graph_bridge_residual(v, phi, grad=gr)
            hs.append(g.h)
            res.append(last["residual"])
        order = fitted_order(hs, res)
        row = {"case": name, "h": hs, "residuals": res, "order": order, "lhs": last["lhs"],
               "rhs": last["rhs"]}
        ok = order >= tols["min_order"]
        if name == "sphere_cap":
            # K = 1/R^2 and phi has unit mass
            row["oracle"] = 0.25
            row["rel_to_oracle"] = max(abs(last["lhs"] - 0.25), abs(last["rhs"] - 0.25)) / 0.25
            ok = ok and row["rel_to_oracle"] <= tols["oracle"]
        row["pass"] = ok
        checks.append(row)
    return checks


def suite_commutators(tols, spec=None, K=10):
    grid, eps, win = rate_setup(K)
    checks = []
    for alpha in (0.7, 0.8):
        f = weierstrass(alpha, grid)
        p, q = sample_gradient(f, grid)
        V = VectorField2D.from_arrays(grid, p.values, q.values)
        for j in (0, 1):
            fit = commutator_rate(V, V, j, eps, window=win)
            t = 2 * alpha - j - 0.1
            checks.append({"case": f"commutator alpha={alpha} j={j}", "fit": fit.to_dict(),
                           "threshold": t, "pass": fit.slope >= t})
        fit = triple_commutator_rate(V, V, V, eps, window=win)
        t = 2 * alpha - 1 - 0.1
        checks.append({"case": f"triple alpha={alpha}", "fit": fit.to_dict(), "threshold": t,
                       "pass": fit.slope >= t})
        fit = besov_decay_probe(p, eps, grad=(p.values, q.values), window=win)
        t = 2 * alpha - 2 - 0.1
        checks.append({"case": f"besov alpha={alpha}", "fit": fit.to_dict(), "threshold": t,
                       "pass": fit.slope >= t})
    return checks


DEFAULT_DISKS = (1.0, 2.0, 4.0)


def suite_alexandrov(tols, spec=None):
    checks = []
    if spec is not None:
        grid = spec.grid if spec.grid is not None else square_grid(513, 5.0)
        cases = [(spec.kind, analytic_field(spec.kind, spec.params, grid))]
    else:
        grid = square_grid(513, 5.0)
        cases = [("quadratic", quadratic(1.0)), ("quadratic+quartic", quadratic(1.0, 0.1)),
                 ("smoothed_cone", smoothed_cone(0.2)), ("sphere_cap", sphere_cap(8.0)),
                 ("concave_quadratic", quadratic(-1.0))]
    disks = [DomainU.disk((0.0, 0.0), R) for R in DEFAULT_DISKS]
    usable = [U for U in disks if U.inside_grid(grid, margin=0.25 * U.params[2] + 20 * grid.h)]
    skipped = [U.to_dict() for U in disks if U not in usable]
    if not usable:
        raise UsageError("grid too small for any of the default disks")
    for name, f in cases:
        v, gr = sampled(f, grid)
        try:
            r = alexandrov_verify(v, usable, grad=gr, tol=tols["triple"])
            checks.append({"case": name, **r, "skipped_domains": skipped, "pass": r["verdict"]})
        except PreconditionError as exc:
            checks.append({"case": name, "rejected": str(exc), "pass": False})
    return checks


def suite_extrinsic_tv(tols, spec=None):
    checks = []
    omega = (-0.6, 0.6, -0.6, 0.6)
    cases = [("quadratic", quadratic(1.0), square_grid(257, 1.0)),
             ("smoothed_cone", smoothed_cone(0.2), square_grid(257, 1.0)),
             ("sphere_cap", sphere_cap(2.0), square_grid(257, 1.0))]
    if spec is not None:
        g = spec.grid if spec.grid is not None else square_grid(257, 1.0)
        cases = [(spec.kind, analytic_field(spec.kind, spec.params, g), g)]
    for name, f, grid in cases:
        v, gr = sampled(f, grid)
        parts = partition_rect(omega, 2, 2)
        tv = spherical_image_tv(v, parts, grad=gr)
        mu, _ = measure_of(v, DomainU.rect(*omega), grad=gr)
        checks.append({"case": name, "parts": tv.areas, "total": tv.total, "mu_f_omega": mu,
                       "pass": tv.total <= mu * (1 + tols["tv"])})
    if spec is None:
        grid = square_grid(257, 1.0)
        v, gr = sampled(sphere_cap(2.0), grid)
        tv = spherical_image_tv(v, [DomainU.disk((0.0, 0.0), 0.5)], grad=gr)
        oracle = 2 * math.pi * (1 - math.sqrt(1 - (0.5 / 2.0) ** 2))
        rel = abs(tv.total - oracle) / oracle
        checks.append({"case": "sphere_cap-oracle", "area": tv.total, "oracle": oracle,
                       "rel": rel, "pass": rel <= tols["oracle"]})
    return checks


SUITE_FUNCS = {
    "degree-formula": (suite_degree_formula, {"rel_residual": 0.02, "min_order": 1.0}),
    "mass-identity": (suite_mass_identity, {"rel_gap": 0.02}),
    "invariance": (suite_invariance, {"exact": 1e-10, "min_order": 1.0}),
    "graph-bridge": (suite_graph_bridge, {"min_order": 1.0, "oracle": 0.02}),
    "commutators": (suite_commutators, {}),
    "alexandrov": (suite_alexandrov, {"triple": 0.03}),
    "extrinsic-tv": (suite_extrinsic_tv, {"tv": 0.03, "oracle": 0.03}),
}


# ----------------------------------------------------------------------------
# subcommands


def _load_spec(args):
    if not getattr(args, "spec", None):
        return None
    spec = GeneratorSpec.from_json(args.spec)
    if args.grid:
        spec = GeneratorSpec(spec.kind, spec.params, parse_grid(args.grid))
    return spec


def _out_dir(args):
    d = Path(args.out or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _finish(report, path, ok):
    io.write_json(path, report)
    if ok:
        print(path)
        return 0
    print(f"FAILED: {path}")
    return 1


def cmd_generate(args):
    spec = _load_spec(args)
    if spec is None:
        raise UsageError("generate needs --spec")
    out = _out_dir(args)
    gen = generate(spec)
    if spec.kind.startswith("diffeo_"):
        if spec.grid is None:
            raise UsageError("diffeo generators need --grid (or a grid in the spec) to sample")
        X1, X2 = gen.field.sample(spec.grid)
        paths = [io.write_grid(out / f"{spec.kind}_{c}.grid", np.asarray(a), spec.grid)
                 for c, a in (("xi1", X1), ("xi2", X2))]
    else:
        paths = [io.write_grid(out / f"{spec.kind}.grid", gen.field)]
    meta = {"spec": spec.to_dict(), "meta": gen.meta, "files": [p.name for p in paths]}
    io.write_json(out / f"{spec.kind}.json", meta)
    for p in paths:
        print(p)
    return 0


def _phi(text, normalize=True):
    cx, cy, r = parse_floats(text, 3, "--phi")
    return bump((cx, cy), r, normalize=normalize)


def cmd_hessdet(args):
    v = io.read_grid(args.v)
    p = det_hessian_pairing(v, _phi(args.phi, not args.raw))
    sys.stdout.write(io.dumps(p))
    return 0


def cmd_curvature(args):
    g = io.read_metric_bundle(args.metric)
    p = kappa_pairing(g, _phi(args.phi, not args.raw))
    sys.stdout.write(io.dumps(p))
    return 0


def cmd_degree(args):
    v = io.read_grid(args.v)
    U = DomainU.parse(args.U)
    y = parse_floats(args.y, 2, "--y")
    print(winding_degree(gradient(v), U, y))
    return 0


def cmd_measure(args):
    v = io.read_grid(args.v)
    U = DomainU.parse(args.U)
    out = {"U": U.to_dict(), "image_area": gradient_image_area(v, U).to_dict()}
    mu, pairs = measure_of(v, U)
    out["mu_f"] = mu
    out["indicator_pairings"] = pairs
    if args.degree:
        out["degree_identity"] = degree_mass_identity(v, U, check=False)
    sys.stdout.write(io.dumps(out))
    return 0


def cmd_rates(args):
    grid, eps, win = _ladder_setup(args)
    out = _out_dir(args)
    alpha = args.alpha
    j = args.j
    if args.kind == "pullback":
        xi = Diffeo2D.rough(alpha, 0.2, int(round(-math.log(grid.h, 4))))
        fit, r = pullback_mollification_rate(graph_metric_fn(sphere_cap(2.0)), xi, j, eps, grid,
                                             radius=0.5 * (win.nx - 1) * grid.h)
        thr = (1 + j) * alpha - j - 0.1
        v, gr = sampled(weierstrass(alpha, grid), grid)
        dmin = mollified_graph_det_min(v, eps, grad=gr)
        extra = {"ball_radius": r, "graph_metric_min_det": dmin}
    else:
        f = weierstrass(alpha, grid)
        p, q = sample_gradient(f, grid)
        V = VectorField2D.from_arrays(grid, p.values, q.values)
        extra = {}
        if args.kind == "commutator":
            fit = commutator_rate(V, V, j, eps, window=win)
            thr = 2 * alpha - j - 0.1
        elif args.kind == "triple":
            fit = triple_commutator_rate(V, V, V, eps, j=j, window=win)
            thr = 2 * alpha - 1 - 0.1 if j == 1 else 2 * alpha - 0.1
        else:
            fit = besov_decay_probe(p, eps, grad=(p.values, q.values), window=win)
            thr = 2 * alpha - 2 - 0.1
    stem = f"rates_{args.kind}_a{alpha:g}_j{j}"
    io.write_rate_csv(out / f"{stem}.csv", fit)
    report = {"kind": args.kind, "alpha": alpha, "j": j, "fit": fit, "threshold": thr,
              "grid": {"nx": grid.nx, "ny": grid.ny, "x0": grid.x0, "y0": grid.y0, "h": grid.h},
              "pass": fit.slope >= thr and extra.get("graph_metric_min_det", 1.0) >= 0.5, **extra}
    print(f"slope {fit.slope:.6g} (threshold {thr:.6g})")
    return _finish(report, out / f"{stem}.json", report["pass"])


def cmd_verify(args):
    func, defaults = SUITE_FUNCS[args.suite]
    tols = parse_tols(args.tol, defaults)
    spec = _load_spec(args)
    out = _out_dir(args)
    checks = func(tols, spec)
    ok = all(c["pass"] for c in checks)
    report = {"suite": args.suite, "tolerances": tols, "spec": spec.to_dict() if spec else None,
              "checks": checks, "pass": ok}
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['case']}")
    return _finish(report, out / f"verify_{args.suite}.json", ok)


def build_parser():
    ap = argparse.ArgumentParser(prog="weakcurv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("generate", help="sample a generator spec to GRID2D files")
    p.add_argument("--spec", required=True)
    p.add_argument("--grid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("hessdet", help="pair Det D^2 v with a bump")
    p.add_argument("--v", required=True)
    p.add_argument("--phi", required=True, help="cx,cy,r")
    p.add_argument("--raw", action="store_true", help="do not normalize the bump")
    p.set_defaults(func=cmd_hessdet)

    p = sub.add_parser("curvature", help="pair kappa_g with a bump")
    p.add_argument("--metric", required=True, help="metric bundle manifest")
    p.add_argument("--phi", required=True, help="cx,cy,r")
    p.add_argument("--raw", action="store_true")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("degree", help="degree of grad v on U at y")
    p.add_argument("--v", required=True)
    p.add_argument("--U", required=True, help="disk:cx,cy,r or rect:xmin,xmax,ymin,ymax")
    p.add_argument("--y", required=True)
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("measure", help="gradient-image area and mu_f(U)")
    p.add_argument("--v", required=True)
    p.add_argument("--U", required=True)
    p.add_argument("--degree", action="store_true", help="also integrate the degree")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("rates", help="mollification rate study on a lacunary input")
    p.add_argument("kind", choices=("commutator", "triple", "besov", "pullback"))
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--j", type=int, choices=(0, 1), default=0)
    p.add_argument("--eps", help="e0,k: ladder start and rung count")
    p.add_argument("--K", type=int, default=10, help="levels; h = 4^-K")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--spec")
    p.add_argument("--grid")
    p.add_argument("--out")
    p.add_argument("--tol", action="append", metavar="NAME=VALUE")
    p.set_defaults(func=cmd_verify)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
