"""Command-line front end: verify, generate, backlund, curvature, catalog.

Every run is a pure function of its flags (plus --seed where randomness is
involved); reports are canonical JSON so identical invocations are
byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import backlund as bt
from .defaults import DEFAULTS
from .expr import ExprError, JetExpr, ParamSymbol
from .families import (FamilyError, GenericityViolation, catalog, catalog_entry,
                       GeneralFamilyInput, KdVFamilyInput, generate_general,
                       generate_kdv_family, kdv_remark_preset, mkdv_family_preset,
                       nls_family_preset)
from .numerics import (Grid, SampledSolution, gaussian_curvature, holonomy_defect,
                       metric_field, observed_order, pde_residual, write_field_csv)
from .parser import parse_expr
from .verify import (build_linear_problem, document_bytes, document_to_system,
                     system_to_document, verify_describes)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(document_bytes(obj))


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- verify ----------------------------------------------------------------------


def cmd_verify(args) -> int:
    try:
        doc = json.loads(Path(args.system).read_text())
        sys_, fijs, _params = document_to_system(doc)
    except (OSError, ValueError, KeyError, ExprError) as err:
        print(f"error: malformed system definition: {err}", file=sys.stderr)
        return 2
    report = verify_describes(sys_, fijs, seed=args.seed)
    out = _out_dir(args)
    _write_json(out / "verify-report.json", report.to_dict())
    print(f"{doc.get('description', args.system)}: {report.verdict}"
          + (f" ({report.reason})" if report.reason else ""))
    return 0 if report.ok else 1


# -- generate --------------------------------------------------------------------


def _parse_bindings(pairs: str) -> dict[str, str]:
    out = {}
    if pairs:
        for item in pairs.split(","):
            if "=" not in item:
                raise ValueError(f"binding {item!r} is not of the form key=value")
            key, value = item.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _expr_binding(raw: str, params) -> JetExpr:
    try:
        return JetExpr.const(Fraction(raw))
    except ValueError:
        return parse_expr(raw, params)


def cmd_generate(args) -> int:
    try:
        bindings = _parse_bindings(args.params or "")
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    eta = ParamSymbol("eta")
    pmap = {"eta": eta}
    try:
        delta = int(bindings.get("delta", "1"))
        if args.family == "kdv-remark":
            sys_, fijs, params = kdv_remark_preset()
        elif args.family == "nls":
            sys_, fijs, params = nls_family_preset(
                Fraction(bindings.get("k", "1")), delta)
        elif args.family == "mkdv":
            sys_, fijs, params = mkdv_family_preset(delta)
        elif args.family.startswith("kdv-"):
            placement = args.family.split("-", 1)[1]
            inp = KdVFamilyInput(
                a=Fraction(bindings.get("a", "1")), eta=eta,
                a1=_expr_binding(bindings.get("a1", "1"), pmap),
                b1=_expr_binding(bindings.get("b1", "0"), pmap),
                a2=_expr_binding(bindings.get("a2", "0"), pmap),
                b2=_expr_binding(bindings.get("b2", "1"), pmap),
                c=_expr_binding(bindings.get("c", "0"), pmap),
                p=_expr_binding(bindings.get("p", "0"), pmap),
                delta=delta, placement=placement)
            sys_, fijs = generate_kdv_family(inp)
            params = pmap
        elif args.family.startswith("general-"):
            placement = args.family.split("-", 1)[1]
            required = ("ell", "g", "h", "P", "q")
            missing = [k for k in required if k not in bindings]
            if missing:
                print(f"error: missing bindings {missing}", file=sys.stderr)
                return 2
            inp = GeneralFamilyInput(
                ell=_expr_binding(bindings["ell"], pmap),
                g=_expr_binding(bindings["g"], pmap),
                h=_expr_binding(bindings["h"], pmap),
                P=_expr_binding(bindings["P"], pmap),
                q=_expr_binding(bindings["q"], pmap),
                H=_expr_binding(bindings["H"], pmap) if "H" in bindings else None,
                delta=delta, placement=placement)
            sys_, fijs = generate_general(inp)
            params = pmap
        else:
            print(f"error: unknown family {args.family!r}", file=sys.stderr)
            return 2
    except GenericityViolation as err:
        print(f"error: genericity violation: {err}", file=sys.stderr)
        return 1
    except (FamilyError, ExprError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    payload = document_bytes(system_to_document(sys_, fijs, params))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode())
    return 0


# -- backlund --------------------------------------------------------------------


def _bt_params(args) -> bt.BTParams:
    return bt.BTParams(lambda1=args.lambda1, lambda2=args.lambda2,
                       sigma=args.sigma, k1=args.k1, k2=args.k2)


def cmd_backlund(args) -> int:
    defaults = DEFAULTS
    out = _out_dir(args)
    try:
        grid = Grid.from_spec(args.grid)
        params = _bt_params(args)
    except (ValueError, bt.BacklundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    if args.seed_name == "vacuum":
        seed = bt.seed_constant(grid, 0.0, 0.0)
        pp_exprs = bt.vacuum_pseudopotential(params)
        reference = bt.bt_vacuum(params, grid, defaults)
    elif args.seed_name == "u0v1":
        seed = bt.seed_constant(grid, 0.0, 1.0)
        pp_exprs = bt.u0v1_pseudopotential(params)
        reference = bt.bt_u0v1(params, grid, defaults)
    else:
        try:
            doc = json.loads(Path(args.seed_name).read_text())
            seed = SampledSolution.from_exprs(
                grid, parse_expr(doc["u"]), parse_expr(doc["v"]))
        except (OSError, ValueError, KeyError, ExprError) as err:
            print(f"error: bad seed: {err}", file=sys.stderr)
            return 2
        pp_exprs = reference = None

    if args.init:
        phi0, psi0 = (float(tok) for tok in args.init.split(","))
    elif pp_exprs is not None:
        vals = {"x": np.array(grid.x0), "t": np.array(grid.t0)}
        from .numerics import eval_on
        phi0 = float(eval_on(pp_exprs[0], vals, ()))
        psi0 = float(eval_on(pp_exprs[1], vals, ()))
    else:
        print("error: --init phi0,psi0 is required for file seeds", file=sys.stderr)
        return 2

    ck = catalog_entry("coupled-kdv")
    try:
        pp = bt.integrate_pseudopotential(seed, params, (phi0, psi0), defaults)
        transformed = bt.bt_transform(seed, pp, params.lambda1)
    except (bt.BlowUpError, bt.EmptyMaskError, bt.MaskCollisionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    report = {
        "params": {"lambda1": params.lambda1, "lambda2": params.lambda2,
                   "sigma": params.sigma, "k1": params.k1, "k2": params.k2,
                   "eta": args.eta, "init": [phi0, psi0], "seed": args.seed_name,
                   "grid": args.grid},
        "cross_defect": {"max": pp.defect_max, "mean": pp.defect_mean},
        "mask_fraction": transformed.masked_fraction(),
        "thresholds": defaults.to_dict(),
    }
    checks = []

    if reference is not None:
        m = transformed.mask & reference.mask
        pipeline_err = float(np.abs(transformed.u - reference.u)[m].max())
        pipeline_err = max(pipeline_err,
                           float(np.abs(transformed.v - reference.v)[m].max()))
        report["pipeline_vs_closed_form"] = pipeline_err
        checks.append(("pipeline-matches-closed-form",
                       pipeline_err < defaults.pipeline_tol))

        pde = pde_residual(ck.system, reference)
        report["pde_residual"] = pde.to_dict()
        checks.append(("pde-residual-analytic", pde.max < defaults.residual_tol))

        bt_stats = bt.bt_first_order_residual(seed, reference, params)
        report["bt_residual"] = bt_stats.to_dict()
        checks.append(("first-order-system", bt_stats.max < defaults.bt_residual_tol))

        E, F, G, mmask = metric_field(ck.fijs, reference, {"eta": args.eta})
        K, kmask = gaussian_curvature(E, F, G, grid, mmask, defaults.degeneracy_tol)
        if kmask.any():
            kerr = float(np.abs(K[kmask] + 1.0).max())
            report["curvature"] = {"max_abs_K_plus_1": kerr,
                                   "valid_fraction":
                                       float(np.count_nonzero(kmask)) / kmask.size}
            if grid.nx >= 65 and grid.nt >= 65:
                checks.append(("curvature", kerr < defaults.curvature_tol))
    else:
        pde = pde_residual(ck.system, transformed)
        report["pde_residual_fd"] = pde.to_dict()

    checks.append(("mask-fraction",
                   transformed.masked_fraction() <= defaults.mask_fraction_limit))
    report["checks"] = {name: bool(ok) for name, ok in checks}

    write_field_csv(out / "solution.csv", grid,
                    {"u": transformed.u, "v": transformed.v}, transformed.mask)
    _write_json(out / "certification.json", report)
    failed = [name for name, ok in checks if not ok]
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return 0 if not failed else 1


# -- curvature -------------------------------------------------------------------


def cmd_curvature(args) -> int:
    defaults = DEFAULTS
    out = _out_dir(args)
    try:
        grid = Grid.from_spec(args.grid)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    if args.oracle == "sphere":
        errors = []
        g = grid
        for _ in range(args.levels):
            xm, _tm = g.mesh()
            K, mask = gaussian_curvature(np.ones_like(xm), np.zeros_like(xm),
                                         np.sin(xm) ** 2, g)
            errors.append(float(np.abs(K[mask] - 1.0).max()))
            g = g.refined()
        report = {"oracle": "sphere", "target_K": 1.0, "errors": errors,
                  "order": observed_order(errors) if len(errors) > 1 else None}
        _write_json(out / "curvature.json", report)
        ok = errors[-1] < defaults.curvature_tol
        print(f"{'PASS' if ok else 'FAIL'}  sphere-oracle |K-1| = {errors[-1]:.2e}")
        return 0 if ok else 1

    try:
        if args.system_name:
            entry = catalog_entry(args.system_name)
            sys_, fijs = entry.system, entry.fijs
        else:
            doc = json.loads(Path(args.system).read_text())
            sys_, fijs, _ = document_to_system(doc)
        params = _bt_params(args)
    except (OSError, ValueError, KeyError, ExprError, bt.BacklundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    target = -float(fijs.delta)
    errors = []
    g = grid
    fractions = []
    for _ in range(args.levels):
        sol = bt.bt_vacuum(params, g)
        E, F, G, mmask = metric_field(fijs, sol, {"eta": args.eta})
        K, kmask = gaussian_curvature(E, F, G, g, mmask, defaults.degeneracy_tol)
        fractions.append(1.0 - float(np.count_nonzero(kmask)) / kmask.size)
        if fractions[-1] > defaults.mask_fraction_limit:
            print(f"error: mask fraction {fractions[-1]:.2f} exceeds "
                  f"{defaults.mask_fraction_limit}", file=sys.stderr)
            return 2
        errors.append(float(np.abs(K[kmask] - target).max()))
        g = g.refined()
    order = observed_order(errors) if len(errors) > 1 else None
    report = {"target_K": target, "errors": errors, "order": order,
              "mask_fractions": fractions, "eta": args.eta,
              "params": {"lambda1": args.lambda1, "lambda2": args.lambda2,
                         "sigma": args.sigma, "k1": args.k1, "k2": args.k2}}
    _write_json(out / "curvature.json", report)
    ok = errors[-1] < defaults.curvature_tol
    if order is not None:
        ok = ok and defaults.order_low <= order <= defaults.order_high
    print(f"{'PASS' if ok else 'FAIL'}  max|K - ({target})| = {errors[-1]:.2e}"
          + (f", order = {order:.2f}" if order is not None else ""))
    return 0 if ok else 1


# -- catalog ---------------------------------------------------------------------


def cmd_catalog(args) -> int:
    if args.action == "list":
        for entry in catalog():
            print(f"{entry.name:12s} delta={entry.fijs.delta:+d}  "
                  f"{entry.system.description}")
        return 0
    if args.action == "dump":
        if not args.name:
            print("error: dump needs a catalog name", file=sys.stderr)
            return 2
        try:
            entry = catalog_entry(args.name)
        except KeyError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        payload = document_bytes(entry.to_document())
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            (Path(args.out) / f"{entry.name}.json").write_bytes(payload)
        else:
            sys.stdout.write(payload.decode())
        return 0
    # dump-all
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for entry in catalog():
        (out / f"{entry.name}.json").write_bytes(document_bytes(entry.to_document()))
        print(f"wrote {out / (entry.name + '.json')}")
    return 0


# -- argument wiring --------------------------------------------------------------


def _add_bt_flags(p):
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--lambda2", type=float, default=0.0)
    p.add_argument("--sigma", type=int, default=1)
    p.add_argument("--k1", type=float, default=0.0)
    p.add_argument("--k2", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=1.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pssurf",
        description="verify, generate and transform constant-curvature "
                    "evolution systems")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check a system-definition document")
    p.add_argument("system")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("generate", help="emit a family instance as JSON")
    p.add_argument("family",
                   help="kdv-f21|kdv-f11|kdv-f31|general-f21|general-f11|"
                        "general-f31|nls|mkdv|kdv-remark")
    p.add_argument("--params", default="")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("backlund", help="transform a seed solution")
    p.add_argument("--seed", dest="seed_name", default="vacuum",
                   help="vacuum | u0v1 | path to {u, v} JSON")
    p.add_argument("--grid", default="0,0,0.015625,0.015625,65,65",
                   help="x0,t0,dx,dt,nx,nt")
    p.add_argument("--init", default=None, help="phi0,psi0 at the grid origin")
    p.add_argument("--out", default=None)
    _add_bt_flags(p)
    p.set_defaults(fn=cmd_backlund)

    p = sub.add_parser("curvature", help="certify induced-metric curvature")
    p.add_argument("--system", default=None, help="system-definition JSON path")
    p.add_argument("--system-name", default=None, help="catalog entry name")
    p.add_argument("--oracle", default=None, choices=[None, "sphere"],
                   help="run a synthetic-metric oracle instead")
    p.add_argument("--grid", default="0,0,0.015625,0.015625,65,65")
    p.add_argument("--levels", type=int, default=3,
                   help="number of refinement levels for the order estimate")
    p.add_argument("--out", default=None)
    _add_bt_flags(p)
    p.set_defaults(fn=cmd_curvature)

    p = sub.add_parser("catalog", help="list or dump the named systems")
    p.add_argument("action", choices=["list", "dump", "dump-all"])
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_catalog)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
